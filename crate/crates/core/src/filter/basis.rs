use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::sobolev::HkJet;

/// Gram matrices with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Registry of chart subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisSpec {
    /// Centred monomials `x^i - E_mu[x^i]`, `i = 1..m`.
    Polynomial { m: usize },
    /// The monomials plus the centred bump `exp(-x^2/2)`.
    PolyPlusBump { m: usize },
}

impl BasisSpec {
    pub fn m(&self) -> usize {
        match *self {
            Self::Polynomial { m } | Self::PolyPlusBump { m } => m,
        }
    }
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polynomial { m } => write!(f, "polynomial({m})"),
            Self::PolyPlusBump { m } => write!(f, "poly_plus_bump({m})"),
        }
    }
}

/// Finite-dimensional chart subspace `span(eta_i)` with its `H^k` Gram matrix.
///
/// Registry bases carry the constant function as their first element, ahead
/// of the centred shape functions, so the level of the chart can move.
#[derive(Debug, Clone)]
pub struct SubmanifoldBasis {
    functions: Vec<GridFunction>,
    jets: Vec<HkJet>,
    k_proj: usize,
    gram: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    condition: f64,
}

impl SubmanifoldBasis {
    pub fn from_spec(spec: BasisSpec, domain: &Domain, k_proj: usize) -> Result<Self> {
        if domain.grid().dim() != 1 {
            return Err(invalid("basis", "registry bases are one-dimensional"));
        }
        let m = spec.m();
        if m == 0 {
            return Err(invalid("m", "basis needs at least one shape function"));
        }
        let mut functions = vec![domain.constant(1.0)];
        for i in 1..=m {
            functions.push(domain.centre(&domain.sample_1d(|x| x.powi(i as i32))));
        }
        if let BasisSpec::PolyPlusBump { .. } = spec {
            functions.push(domain.centre(&domain.sample_1d(|x| (-0.5 * x * x).exp())));
        }
        Self::from_functions(functions, domain, k_proj)
    }

    pub fn from_functions(functions: Vec<GridFunction>, domain: &Domain, k_proj: usize) -> Result<Self> {
        if functions.is_empty() {
            return Err(invalid("basis", "empty basis"));
        }
        let jets = functions
            .iter()
            .map(|f| HkJet::new(f, k_proj, domain))
            .collect::<Result<Vec<_>>>()?;
        let n = jets.len();
        let gram = DMatrix::from_fn(n, n, |i, j| jets[i].inner(&jets[j], domain));
        let gram = (&gram + gram.transpose()) * 0.5;
        let eig = gram.clone().symmetric_eigen();
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        let chol = Cholesky::new(gram.clone()).ok_or(Error::IllConditioned { condition })?;
        Ok(Self { functions, jets, k_proj, gram, chol, condition })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[GridFunction] {
        &self.functions
    }

    pub fn k_proj(&self) -> usize {
        self.k_proj
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Coefficients `c` of the `H^k` projection of `w`: `gram c = b`,
    /// `b_i = <eta_i, w>`.
    pub fn project(&self, w: &GridFunction, domain: &Domain) -> Result<DVector<f64>> {
        let jw = HkJet::new(w, self.k_proj, domain)?;
        let b = DVector::from_iterator(self.len(), self.jets.iter().map(|j| j.inner(&jw, domain)));
        Ok(self.chol.solve(&b))
    }

    /// `sum_i c_i eta_i`.
    pub fn combine(&self, coeffs: &DVector<f64>) -> GridFunction {
        let mut out = vec![0.0; self.functions[0].len()];
        for (c, f) in coeffs.iter().zip(&self.functions) {
            for (o, v) in out.iter_mut().zip(f.values()) {
                *o += c * v;
            }
        }
        GridFunction::new(self.functions[0].grid(), out).expect("finite combination")
    }
}

/// Projection of `w` onto the span, as a grid function.
pub fn project_hk(w: &GridFunction, basis: &SubmanifoldBasis, domain: &Domain) -> Result<DVector<f64>> {
    basis.project(w, domain)
}

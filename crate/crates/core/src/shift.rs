use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftTerm<G> {
    pub b: C64,
    pub g: G,
}

/// The operator `B = sum_n b_n T(g_n)` as a list of weighted group elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ShiftTerm<G>>", into = "Vec<ShiftTerm<G>>")]
#[serde(bound(serialize = "G: Serialize + Clone", deserialize = "G: Deserialize<'de>"))]
pub struct ShiftCombination<G> {
    terms: Vec<ShiftTerm<G>>,
}

impl<G> ShiftCombination<G> {
    pub fn new(terms: Vec<ShiftTerm<G>>) -> Result<Self> {
        if terms.is_empty() {
            return contract("a shift combination needs at least one term");
        }
        if terms.iter().any(|t| t.b.norm() == 0.0 || !t.b.re.is_finite() || !t.b.im.is_finite()) {
            return contract("shift weights b_n must be finite and nonzero");
        }
        Ok(Self { terms })
    }

    pub fn single(g: G) -> Self {
        Self { terms: vec![ShiftTerm { b: C64::new(1.0, 0.0), g }] }
    }

    pub fn terms(&self) -> &[ShiftTerm<G>] {
        &self.terms
    }

    /// `h(gamma) = sum_n b_n gamma(g_n)` for the character supplied.
    pub fn symbol(&self, mut character: impl FnMut(&G) -> C64) -> C64 {
        self.terms.iter().map(|t| t.b * character(&t.g)).sum()
    }
}

impl<G> TryFrom<Vec<ShiftTerm<G>>> for ShiftCombination<G> {
    type Error = crate::error::PronyError;

    fn try_from(terms: Vec<ShiftTerm<G>>) -> Result<Self> {
        Self::new(terms)
    }
}

impl<G> From<ShiftCombination<G>> for Vec<ShiftTerm<G>> {
    fn from(s: ShiftCombination<G>) -> Self {
        s.terms
    }
}

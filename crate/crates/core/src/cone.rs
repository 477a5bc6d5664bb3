//! The cone `C(s, α)` and the support enumeration shared by the checkers.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters `(s, α, q)` of a cone-restricted regularity constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub s: usize,
    pub alpha: f64,
    #[serde(with = "norm_index")]
    pub q: f64,
}

impl ConeSpec {
    pub fn new(s: usize, alpha: f64, q: f64) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidParameter("sparsity s must be at least 1".into()));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("cone opening α = {alpha} must be positive")));
        }
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("norm index q = {q} must be at least 1")));
        }
        Ok(Self { s, alpha, q })
    }

    pub fn l1(s: usize, alpha: f64) -> Result<Self> {
        Self::new(s, alpha, 1.0)
    }

    pub fn linf(s: usize, alpha: f64) -> Result<Self> {
        Self::new(s, alpha, f64::INFINITY)
    }

    pub fn with_q(self, q: f64) -> Result<Self> {
        Self::new(self.s, self.alpha, q)
    }

    /// `s < p` is required whenever the cone lives in `R^p`.
    pub fn check_dimension(&self, p: usize) -> Result<()> {
        if self.s >= p {
            return Err(Error::InvalidParameter(format!(
                "sparsity s = {} must be below the dimension p = {p}",
                self.s
            )));
        }
        Ok(())
    }

    /// `s^{1/q}`, equal to 1 at `q = ∞`.
    pub fn s_pow(&self) -> f64 {
        if self.q.is_infinite() {
            1.0
        } else {
            libm::pow(self.s as f64, 1.0 / self.q)
        }
    }
}

pub(crate) mod norm_index {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(q: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if q.is_infinite() {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(*q)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = f64;
            fn expecting(&self, f: &mut core::fmt::Formatter) -> core::fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
                    _ => v.parse().map_err(|_| E::custom("expected a number or \"inf\"")),
                }
            }
        }
        de.deserialize_any(V)
    }
}

/// `C(n, k)` with saturation instead of overflow.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Lexicographic `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n, idx: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in (i + 1)..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Indices of the `s` largest entries of `|v|`, ties broken by index,
/// returned in increasing order.
pub fn top_support(v: &[f64], s: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    let mut support: Vec<usize> = order.into_iter().take(s).collect();
    support.sort_unstable();
    support
}

/// Whether `v ∈ C(s, α)`, with the witnessing support.
///
/// The top-`s` coordinates by magnitude maximise `|v_S|₁` over all supports
/// of size `s`, so they decide membership.
pub fn cone_membership(v: &[f64], spec: &ConeSpec) -> (bool, Vec<usize>) {
    cone_membership_tol(v, spec, 0.0)
}

/// Membership with slack `tol · |v|₁` on the cone inequality.
pub fn cone_membership_tol(v: &[f64], spec: &ConeSpec, tol: f64) -> (bool, Vec<usize>) {
    let support = top_support(v, spec.s.min(v.len()));
    let (on, off) = split_l1(v, &support);
    (spec.alpha * on >= off - tol * (on + off), support)
}

/// `(|v_S|₁, |v_{S^c}|₁)`.
pub fn split_l1(v: &[f64], support: &[usize]) -> (f64, f64) {
    let mut on = 0.0;
    let mut total = 0.0;
    for (i, x) in v.iter().enumerate() {
        total += x.abs();
        if support.contains(&i) {
            on += x.abs();
        }
    }
    (on, total - on)
}

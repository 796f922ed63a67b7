//! Catalog of objective and data norms.
//!
//! A [`NormModel`] evaluates a coordinate vector. Operations elsewhere in the
//! crate that accept ambient vectors convert through the [`crate::Basis`]
//! first, so the model itself never sees the basis.
//!
//! Objectives must be differentiable away from the origin with strictly
//! convex level sets; those hypotheses are probed numerically by
//! [`NormModel::check_hypotheses`] rather than proved. Degree-1 models are
//! minimized through their squared form, which is smooth and has the same
//! minimizers over any convex set.

use crate::error::{Error, Result};
use crate::linalg::{mat_vec, norm2, norm_inf, Lu};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Callback type for user-supplied norms.
pub type NormFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Callback type for user-supplied gradients.
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// The norm catalog. Serialized as a tagged record, e.g.
/// `{"kind":"sep-quad","weights":[1,1]}`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormKind {
    /// `f(sum u_i psi_i) = sum w_i u_i^2`, homogeneous of degree 2.
    SepQuad { weights: Vec<f64> },
    /// Euclidean norm of the coordinate vector.
    Euclidean,
    /// `sqrt(x^T Q x)` with Q symmetric positive definite (row-major).
    Ellipsoidal { q: Vec<f64> },
    /// `sum |x_i|^p` with `p > 1`, homogeneous of degree p.
    PPower { p: f64 },
    /// Weighted p-norm `(sum w_i |x_i|^p)^(1/p)`, `p >= 1`.
    PNorm {
        p: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// Coordinate sup norm `max |x_i|`.
    CoordSup,
    /// User-supplied value and (optional) gradient callbacks, with a declared
    /// homogeneity degree. Not representable in config files.
    #[serde(skip)]
    Generic {
        degree: f64,
        value: NormFn,
        gradient: Option<GradFn>,
    },
}

impl std::fmt::Debug for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormKind::SepQuad { weights } => f.debug_struct("SepQuad").field("weights", weights).finish(),
            NormKind::Euclidean => write!(f, "Euclidean"),
            NormKind::Ellipsoidal { q } => f.debug_struct("Ellipsoidal").field("q", q).finish(),
            NormKind::PPower { p } => f.debug_struct("PPower").field("p", p).finish(),
            NormKind::PNorm { p, weights } => f
                .debug_struct("PNorm")
                .field("p", p)
                .field("weights", weights)
                .finish(),
            NormKind::CoordSup => write!(f, "CoordSup"),
            NormKind::Generic { degree, .. } => {
                f.debug_struct("Generic").field("degree", degree).finish()
            }
        }
    }
}

fn default_scale() -> f64 {
    1.0
}

/// A norm-like objective: a catalog kind plus a positive scalar multiplier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormModel {
    #[serde(flatten)]
    pub kind: NormKind,
    #[serde(default = "default_scale", skip_serializing_if = "is_one")]
    pub scale: f64,
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

/// Sampled diagnostics of the objective hypotheses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureDiagnostic {
    /// `max ||u1 - u2||_2 / ||h(u1) - h(u2)||_2` over sampled level-set pairs;
    /// a sampled lower bound on the Lipschitz constant of the inverse Gauss map.
    pub lipschitz_estimate_hinv: f64,
    /// `min 1 - f((u1+u2)/2)` over sampled pairs; positive means the sampled
    /// level set looks strictly convex.
    pub strict_convexity_margin: f64,
    /// Number of sampled pairs.
    pub samples: usize,
}

impl NormModel {
    pub fn sep_quad(weights: Vec<f64>) -> NormModel {
        NormModel {
            kind: NormKind::SepQuad { weights },
            scale: 1.0,
        }
    }

    pub fn euclidean() -> NormModel {
        NormModel {
            kind: NormKind::Euclidean,
            scale: 1.0,
        }
    }

    pub fn ellipsoidal(q: Vec<f64>) -> NormModel {
        NormModel {
            kind: NormKind::Ellipsoidal { q },
            scale: 1.0,
        }
    }

    pub fn p_power(p: f64) -> NormModel {
        NormModel {
            kind: NormKind::PPower { p },
            scale: 1.0,
        }
    }

    pub fn p_norm(p: f64, weights: Option<Vec<f64>>) -> NormModel {
        NormModel {
            kind: NormKind::PNorm { p, weights },
            scale: 1.0,
        }
    }

    pub fn coord_sup() -> NormModel {
        NormModel {
            kind: NormKind::CoordSup,
            scale: 1.0,
        }
    }

    pub fn coord_l1() -> NormModel {
        NormModel::p_norm(1.0, None)
    }

    pub fn generic(degree: f64, value: NormFn, gradient: Option<GradFn>) -> NormModel {
        NormModel {
            kind: NormKind::Generic {
                degree,
                value,
                gradient,
            },
            scale: 1.0,
        }
    }

    /// Same model multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<NormModel> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter {
                name: "scale",
                message: format!("scale must be positive, got {c}"),
            });
        }
        let mut m = self.clone();
        m.scale *= c;
        Ok(m)
    }

    /// Declared homogeneity degree: `f(l u) = |l|^d f(u)`.
    pub fn homogeneity_degree(&self) -> f64 {
        match &self.kind {
            NormKind::SepQuad { .. } => 2.0,
            NormKind::Euclidean => 1.0,
            NormKind::Ellipsoidal { .. } => 1.0,
            NormKind::PPower { p } => *p,
            NormKind::PNorm { .. } => 1.0,
            NormKind::CoordSup => 1.0,
            NormKind::Generic { degree, .. } => *degree,
        }
    }

    /// Structural validation against a dimension, shared by all roles.
    pub fn validate(&self, n: usize) -> Result<()> {
        let check_weights = |w: &Vec<f64>| -> Result<()> {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "weights",
                    message: "all weights must be positive and finite".into(),
                });
            }
            Ok(())
        };
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::InvalidParameter {
                name: "scale",
                message: format!("scale must be positive, got {}", self.scale),
            });
        }
        match &self.kind {
            NormKind::SepQuad { weights } => check_weights(weights),
            NormKind::Euclidean | NormKind::CoordSup => Ok(()),
            NormKind::Ellipsoidal { q } => {
                if q.len() != n * n {
                    return Err(Error::DimensionMismatch {
                        expected: n * n,
                        got: q.len(),
                    });
                }
                for i in 0..n {
                    for j in 0..i {
                        if (q[i * n + j] - q[j * n + i]).abs() > 1e-12 * norm_inf(q).max(1.0) {
                            return Err(Error::InvalidParameter {
                                name: "q",
                                message: "matrix must be symmetric".into(),
                            });
                        }
                    }
                }
                if !spd_check(q, n) {
                    return Err(Error::InvalidParameter {
                        name: "q",
                        message: "matrix must be positive definite".into(),
                    });
                }
                Ok(())
            }
            NormKind::PPower { p } => {
                if !(*p > 1.0) || !p.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "p",
                        message: format!("p-power exponent must exceed 1, got {p}"),
                    });
                }
                Ok(())
            }
            NormKind::PNorm { p, weights } => {
                if !(*p >= 1.0) || !p.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "p",
                        message: format!("p-norm exponent must be at least 1, got {p}"),
                    });
                }
                if let Some(w) = weights {
                    check_weights(w)?;
                }
                Ok(())
            }
            NormKind::Generic { degree, .. } => {
                if !(*degree > 0.0) || !degree.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "degree",
                        message: format!("homogeneity degree must be positive, got {degree}"),
                    });
                }
                Ok(())
            }
        }
    }

    /// Gate for use as the objective of a cell projection: the model must be
    /// differentiable away from 0 (curvature itself is only sampled).
    pub fn validate_objective(&self, n: usize) -> Result<()> {
        self.validate(n)?;
        match &self.kind {
            NormKind::CoordSup => Err(Error::UnsupportedNorm {
                role: "objective",
                reason: "the coordinate sup norm is not differentiable and its level \
                         sets are not strictly convex"
                    .into(),
            }),
            NormKind::PNorm { p, .. } if *p <= 1.0 => Err(Error::UnsupportedNorm {
                role: "objective",
                reason: format!("p-norm with p = {p} has flat level-set faces"),
            }),
            _ => Ok(()),
        }
    }

    /// Gate for use as the data norm: needs a closed-form bounding box of its
    /// unit ball for the rejection sampler and grid enumeration.
    pub fn validate_data_norm(&self, n: usize) -> Result<()> {
        self.validate(n)?;
        match &self.kind {
            NormKind::Generic { .. } => Err(Error::UnsupportedNorm {
                role: "data norm",
                reason: "generic callback norms have no closed-form ball bounding box".into(),
            }),
            _ => Ok(()),
        }
    }

    /// Value of the model at a coordinate vector.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let s = self.scale;
        match &self.kind {
            NormKind::SepQuad { weights } => {
                s * x.iter().zip(weights).map(|(v, w)| w * v * v).sum::<f64>()
            }
            NormKind::Euclidean => s * norm2(x),
            NormKind::Ellipsoidal { q } => {
                let n = x.len();
                let qx = mat_vec(q, n, x);
                s * crate::linalg::dot(x, &qx).max(0.0).sqrt()
            }
            NormKind::PPower { p } => s * x.iter().map(|v| v.abs().powf(*p)).sum::<f64>(),
            NormKind::PNorm { p, weights } => {
                let sum: f64 = match weights {
                    Some(w) => x.iter().zip(w).map(|(v, wi)| wi * v.abs().powf(*p)).sum(),
                    None => x.iter().map(|v| v.abs().powf(*p)).sum(),
                };
                s * sum.powf(1.0 / p)
            }
            NormKind::CoordSup => s * norm_inf(x),
            NormKind::Generic { value, .. } => s * value(x),
        }
    }

    /// Gradient of the model. Errors at the exact origin.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateAtOrigin);
        }
        let s = self.scale;
        match &self.kind {
            NormKind::SepQuad { weights } => Ok(x
                .iter()
                .zip(weights)
                .map(|(v, w)| s * 2.0 * w * v)
                .collect()),
            NormKind::Euclidean => {
                let norm = norm2(x);
                Ok(x.iter().map(|v| s * v / norm).collect())
            }
            NormKind::Ellipsoidal { q } => {
                let n = x.len();
                let qx = mat_vec(q, n, x);
                let val = crate::linalg::dot(x, &qx).max(0.0).sqrt();
                if val == 0.0 {
                    return Err(Error::DegenerateGradient);
                }
                Ok(qx.iter().map(|v| s * v / val).collect())
            }
            NormKind::PPower { p } => Ok(x
                .iter()
                .map(|v| s * p * v.abs().powf(p - 1.0) * v.signum())
                .collect()),
            NormKind::PNorm { p, weights } => {
                if *p <= 1.0 {
                    return Err(Error::UnsupportedNorm {
                        role: "gradient",
                        reason: format!("p-norm with p = {p} is not differentiable"),
                    });
                }
                let val = self.eval(x) / s;
                if val == 0.0 {
                    return Err(Error::DegenerateGradient);
                }
                let factor = val.powf(1.0 - p);
                Ok(x.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let w = weights.as_ref().map_or(1.0, |w| w[i]);
                        s * factor * w * v.abs().powf(p - 1.0) * v.signum()
                    })
                    .collect())
            }
            NormKind::CoordSup => Err(Error::UnsupportedNorm {
                role: "gradient",
                reason: "the coordinate sup norm is not differentiable".into(),
            }),
            NormKind::Generic {
                value, gradient, ..
            } => match gradient {
                Some(g) => Ok(g(x).iter().map(|v| s * v).collect()),
                None => Ok(numeric_grad(value.as_ref(), x)
                    .iter()
                    .map(|v| s * v)
                    .collect()),
            },
        }
    }

    /// Gauss map `h(u) = grad f(u) / ||grad f(u)||_2` on the unit level set.
    pub fn gauss_map(&self, u: &[f64]) -> Result<Vec<f64>> {
        let value = self.eval(u);
        if (value - 1.0).abs() > 1e-9 {
            return Err(Error::NotOnLevelSet { value });
        }
        let g = self.grad(u)?;
        let norm = norm2(&g);
        if norm < 1e-14 {
            return Err(Error::DegenerateGradient);
        }
        Ok(g.iter().map(|v| v / norm).collect())
    }

    /// Draw a point on the unit level set of this model.
    pub fn sample_level_set<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        loop {
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let v = self.eval(&z);
            if v > 1e-9 && v.is_finite() {
                let lambda = v.powf(-1.0 / self.homogeneity_degree());
                return z.iter().map(|x| x * lambda).collect();
            }
        }
    }

    /// Sampled diagnostics of strict convexity and of the Lipschitz constant
    /// of the inverse Gauss map. `samples` is the number of level-set pairs.
    ///
    /// A non-positive strict-convexity margin is a hard failure; everything
    /// else is reported for the caller to gate on.
    pub fn check_hypotheses(&self, n: usize, samples: usize, seed: u64) -> Result<CurvatureDiagnostic> {
        self.validate(n)?;
        if samples < 100 {
            return Err(Error::InvalidParameter {
                name: "samples",
                message: format!("need at least 100 sampled pairs, got {samples}"),
            });
        }
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(samples);
        let mut margin = f64::INFINITY;
        let mut witness: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        for _ in 0..samples {
            // reject near-coincident pairs: they carry no curvature signal
            // and drown in rounding noise
            let (u1, u2) = loop {
                let a = self.sample_level_set(n, &mut rng);
                let b = self.sample_level_set(n, &mut rng);
                let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
                if d.sqrt() > 1e-6 {
                    break (a, b);
                }
            };
            let mid: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| (a + b) / 2.0).collect();
            let m = 1.0 - self.eval(&mid);
            if m < margin {
                margin = m;
                witness = Some((u1.clone(), u2.clone(), self.eval(&mid)));
            }
            pairs.push((u1, u2));
        }
        if margin <= 0.0 {
            let (u1, u2, midpoint_value) = witness.unwrap();
            return Err(Error::HypothesisViolation {
                margin,
                midpoint_value,
                witness: Box::new((u1, u2)),
            });
        }
        let mut lipschitz: f64 = 0.0;
        for (u1, u2) in &pairs {
            let h1 = self.gauss_map(u1)?;
            let h2 = self.gauss_map(u2)?;
            let du: f64 = u1
                .iter()
                .zip(u2)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let dh: f64 = h1
                .iter()
                .zip(&h2)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let ratio = if dh < 1e-14 { f64::INFINITY } else { du / dh };
            lipschitz = lipschitz.max(ratio);
        }
        Ok(CurvatureDiagnostic {
            lipschitz_estimate_hinv: lipschitz,
            strict_convexity_margin: margin,
            samples,
        })
    }

    /// Value of the smooth solver objective: the model itself for degree-2
    /// kinds, the squared model for degree-1 kinds. Minimizers over any
    /// convex set agree with those of the model.
    pub fn solver_objective_value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            NormKind::SepQuad { .. } | NormKind::PPower { .. } => self.eval(x),
            NormKind::Euclidean => {
                let s = self.scale;
                s * s * crate::linalg::dot(x, x)
            }
            NormKind::Ellipsoidal { q } => {
                let s = self.scale;
                let qx = mat_vec(q, x.len(), x);
                s * s * crate::linalg::dot(x, &qx)
            }
            NormKind::PNorm { .. } | NormKind::CoordSup | NormKind::Generic { .. } => {
                let v = self.eval(x);
                if self.homogeneity_degree() == 2.0 {
                    v
                } else {
                    v * v
                }
            }
        }
    }

    /// Gradient of the solver objective; defined everywhere, including the
    /// origin, where it vanishes.
    pub fn solver_objective_grad(&self, x: &[f64]) -> Vec<f64> {
        let s = self.scale;
        match &self.kind {
            NormKind::SepQuad { weights } => x
                .iter()
                .zip(weights)
                .map(|(v, w)| s * 2.0 * w * v)
                .collect(),
            NormKind::Euclidean => x.iter().map(|v| 2.0 * s * s * v).collect(),
            NormKind::Ellipsoidal { q } => {
                let qx = mat_vec(q, x.len(), x);
                qx.iter().map(|v| 2.0 * s * s * v).collect()
            }
            NormKind::PPower { p } => x
                .iter()
                .map(|v| s * p * v.abs().powf(p - 1.0) * v.signum())
                .collect(),
            NormKind::PNorm { p, weights } => {
                // grad of (sum w |x|^p)^(2/p), scaled by s^2
                let sum: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| weights.as_ref().map_or(1.0, |w| w[i]) * v.abs().powf(*p))
                    .sum();
                if sum == 0.0 {
                    return vec![0.0; x.len()];
                }
                let factor = 2.0 * s * s * sum.powf(2.0 / p - 1.0);
                x.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let w = weights.as_ref().map_or(1.0, |w| w[i]);
                        factor * w * v.abs().powf(p - 1.0) * v.signum()
                    })
                    .collect()
            }
            NormKind::CoordSup => {
                // not a valid solver objective; kept total for diagnostics
                vec![0.0; x.len()]
            }
            NormKind::Generic {
                degree,
                value,
                gradient,
            } => {
                let raw_grad: Vec<f64> = match gradient {
                    Some(g) => g(x),
                    None => numeric_grad(value.as_ref(), x),
                };
                if *degree == 2.0 {
                    raw_grad.iter().map(|v| s * v).collect()
                } else {
                    // d/dx (s f)^2 = 2 s^2 f grad f
                    let f = value(x);
                    raw_grad.iter().map(|v| 2.0 * s * s * f * v).collect()
                }
            }
        }
    }

    /// Hessian of the solver objective when a closed form exists (row-major),
    /// `None` otherwise.
    pub fn solver_objective_hessian(&self, x: &[f64]) -> Option<Vec<f64>> {
        let n = x.len();
        let s = self.scale;
        match &self.kind {
            NormKind::SepQuad { weights } => {
                let mut h = vec![0.0; n * n];
                for i in 0..n {
                    h[i * n + i] = 2.0 * s * weights[i];
                }
                Some(h)
            }
            NormKind::Euclidean => {
                let mut h = vec![0.0; n * n];
                for i in 0..n {
                    h[i * n + i] = 2.0 * s * s;
                }
                Some(h)
            }
            NormKind::Ellipsoidal { q } => Some(q.iter().map(|v| 2.0 * s * s * v).collect()),
            NormKind::PPower { p } if *p >= 2.0 => {
                let mut h = vec![0.0; n * n];
                for i in 0..n {
                    h[i * n + i] = s * p * (p - 1.0) * x[i].abs().powf(p - 2.0);
                }
                Some(h)
            }
            _ => None,
        }
    }

    /// True when the solver objective is an exact quadratic.
    pub fn solver_objective_is_quadratic(&self) -> bool {
        matches!(
            self.kind,
            NormKind::SepQuad { .. } | NormKind::Euclidean | NormKind::Ellipsoidal { .. }
        )
    }

    /// Per-coordinate half-widths of the bounding box of `{x : f(x) <= radius}`.
    pub fn ball_halfwidths(&self, n: usize, radius: f64) -> Result<Vec<f64>> {
        self.validate_data_norm(n)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter {
                name: "radius",
                message: format!("radius must be positive, got {radius}"),
            });
        }
        // {scale * base <= r} = {base <= r / scale}; then scale the unit box
        // by (r/scale)^(1/d).
        let r = (radius / self.scale).powf(1.0 / self.homogeneity_degree());
        let unit: Vec<f64> = match &self.kind {
            NormKind::CoordSup | NormKind::Euclidean | NormKind::PPower { .. } => vec![1.0; n],
            NormKind::SepQuad { weights } => weights.iter().map(|w| w.powf(-0.5)).collect(),
            NormKind::PNorm { p, weights } => (0..n)
                .map(|i| weights.as_ref().map_or(1.0, |w| w[i]).powf(-1.0 / p))
                .collect(),
            NormKind::Ellipsoidal { q } => {
                // half-width_i = sqrt((Q^-1)_ii)
                let lu = Lu::factor(q, n).ok_or(Error::InvalidParameter {
                    name: "q",
                    message: "matrix must be invertible".into(),
                })?;
                let inv = lu.inverse();
                (0..n).map(|i| inv[i * n + i].max(0.0).sqrt()).collect()
            }
            NormKind::Generic { .. } => unreachable!("gated by validate_data_norm"),
        };
        Ok(unit.iter().map(|h| h * r).collect())
    }

    /// Closed-form Lebesgue volume of `{x : f(x) <= radius}` in coordinate
    /// space, when the catalog knows one.
    pub fn ball_volume_closed_form(&self, n: usize, radius: f64) -> Option<f64> {
        let d = self.homogeneity_degree();
        let r = (radius / self.scale).powf(1.0 / d);
        let nf = n as f64;
        match &self.kind {
            NormKind::CoordSup => Some((2.0 * r).powi(n as i32)),
            NormKind::Euclidean => Some(unit_ball_volume(n) * r.powf(nf)),
            NormKind::SepQuad { weights } => {
                // ellipsoid sum w x^2 <= r^2 (r already includes the sqrt)
                let axes: f64 = weights.iter().map(|w| w.powf(-0.5)).product();
                Some(unit_ball_volume(n) * axes * r.powf(nf))
            }
            NormKind::Ellipsoidal { q } => {
                let lu = Lu::factor(q, n)?;
                Some(unit_ball_volume(n) / lu.det().abs().sqrt() * r.powf(nf))
            }
            NormKind::PPower { p } | NormKind::PNorm { p, weights: None } => {
                Some(p_ball_volume(n, *p) * r.powf(nf))
            }
            NormKind::PNorm {
                p,
                weights: Some(w),
            } => {
                let axes: f64 = w.iter().map(|wi| wi.powf(-1.0 / p)).product();
                Some(p_ball_volume(n, *p) * axes * r.powf(nf))
            }
            NormKind::Generic { .. } => None,
        }
    }
}

/// Volume of the Euclidean unit ball in dimension n.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    (std::f64::consts::PI.powf(nf / 2.0)) / gamma(nf / 2.0 + 1.0)
}

/// Volume of the unit p-ball `{sum |x_i|^p <= 1}`.
fn p_ball_volume(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    (2.0 * gamma(1.0 / p + 1.0)).powf(nf) / gamma(nf / p + 1.0)
}

/// Gamma function by Lanczos approximation; plenty for volume constants.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos g = 7, n = 9
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        pi.ln() - (pi * x).sin().abs().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = COEFFS[0];
        let t = x + 7.5;
        for (i, c) in COEFFS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

fn spd_check(q: &[f64], n: usize) -> bool {
    // Cholesky without pivoting; succeeds iff positive definite.
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = q[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

/// Central finite-difference gradient of a scalar function.
pub fn numeric_grad(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

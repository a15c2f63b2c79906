//! Analytic scalar profiles of arclength used for curvatures and twist rates.
//!
//! Every family has closed-form values, derivatives, sup-norms and tail
//! sup-norms, so hypothesis checks such as `a·‖κ‖∞ < 1` carry no sampling
//! error.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude · exp(1 − 1/(1 − x²))` with `x = (s − center)/(width/2)`,
    /// supported on `[center − width/2, center + width/2]`.
    Bump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// Equal to `amplitude` on `[−half_length, half_length]`, smoothly
    /// tapering to zero over `taper` on either side.
    Plateau {
        half_length: f64,
        taper: f64,
        amplitude: f64,
    },
    /// `amplitude / (1 + s²)`.
    Decaying {
        amplitude: f64,
    },
}

impl Profile {
    pub fn bump(center: f64, width: f64, amplitude: f64) -> Self {
        Profile::Bump {
            center,
            width,
            amplitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Input(format!(
                    "profile parameter {what} is not finite"
                )))
            }
        };
        match *self {
            Profile::Zero => Ok(()),
            Profile::Constant { value } => finite(value, "value"),
            Profile::Bump {
                center,
                width,
                amplitude,
            } => {
                finite(center, "center")?;
                finite(amplitude, "amplitude")?;
                if !(width > 0.0 && width.is_finite()) {
                    return Err(Error::Input(format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                Ok(())
            }
            Profile::Plateau {
                half_length,
                taper,
                amplitude,
            } => {
                finite(amplitude, "amplitude")?;
                if !(half_length >= 0.0
                    && taper > 0.0
                    && half_length.is_finite()
                    && taper.is_finite())
                {
                    return Err(Error::Input(format!(
                        "plateau needs half_length ≥ 0 and taper > 0, got {half_length}, {taper}"
                    )));
                }
                Ok(())
            }
            Profile::Decaying { amplitude } => finite(amplitude, "amplitude"),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Profile::Zero => true,
            Profile::Constant { value } => value == 0.0,
            Profile::Bump { amplitude, .. }
            | Profile::Plateau { amplitude, .. }
            | Profile::Decaying { amplitude } => amplitude == 0.0,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => value,
            Profile::Bump {
                center,
                width,
                amplitude,
            } => {
                let x = (s - center) / (0.5 * width);
                if x.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - x * x)).exp()
                }
            }
            Profile::Plateau {
                half_length,
                taper,
                amplitude,
            } => {
                let edge = half_length + taper;
                amplitude * smooth_step((s + edge) / taper) * smooth_step((edge - s) / taper)
            }
            Profile::Decaying { amplitude } => amplitude / (1.0 + s * s),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            Profile::Zero | Profile::Constant { .. } => 0.0,
            Profile::Bump {
                center,
                width,
                amplitude,
            } => {
                let hw = 0.5 * width;
                let x = (s - center) / hw;
                if x.abs() >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - x * x;
                    amplitude * (1.0 - 1.0 / q).exp() * (-2.0 * x / (q * q)) / hw
                }
            }
            Profile::Plateau {
                half_length,
                taper,
                amplitude,
            } => {
                let edge = half_length + taper;
                let a = (s + edge) / taper;
                let b = (edge - s) / taper;
                amplitude
                    * (smooth_step_derivative(a) * smooth_step(b)
                        - smooth_step(a) * smooth_step_derivative(b))
                    / taper
            }
            Profile::Decaying { amplitude } => {
                let q = 1.0 + s * s;
                -2.0 * amplitude * s / (q * q)
            }
        }
    }

    /// `sup_s |value(s)|`.
    pub fn sup_norm(&self) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => value.abs(),
            Profile::Bump { amplitude, .. }
            | Profile::Plateau { amplitude, .. }
            | Profile::Decaying { amplitude } => amplitude.abs(),
        }
    }

    /// `sup_{|s| ≥ l} |value(s)|`.
    pub fn tail_sup(&self, l: f64) -> f64 {
        let l = l.max(0.0);
        match *self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => value.abs(),
            Profile::Bump {
                center, amplitude, ..
            } => {
                if center >= l || center <= -l {
                    amplitude.abs()
                } else {
                    // |value| decreases away from the centre, so the nearest
                    // tail points ±l dominate.
                    self.value(l).abs().max(self.value(-l).abs())
                }
            }
            Profile::Plateau {
                half_length,
                amplitude,
                ..
            } => {
                if l <= half_length {
                    amplitude.abs()
                } else {
                    self.value(l).abs()
                }
            }
            Profile::Decaying { amplitude } => amplitude.abs() / (1.0 + l * l),
        }
    }

    /// Compact support `[lo, hi]`, or `None` when the profile does not vanish
    /// outside a bounded interval. The zero profile reports an empty support.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Profile::Zero => Some((0.0, 0.0)),
            Profile::Constant { value: 0.0 } => Some((0.0, 0.0)),
            Profile::Bump { center, width, .. } => {
                Some((center - 0.5 * width, center + 0.5 * width))
            }
            Profile::Plateau {
                half_length, taper, ..
            } => Some((-(half_length + taper), half_length + taper)),
            _ => None,
        }
    }

    /// Whether the profile tends to zero as `|s| → ∞`.
    pub fn decays(&self) -> bool {
        !matches!(self, Profile::Constant { value } if *value != 0.0)
    }

    /// `∫_0^s value(σ) dσ`.
    pub fn antiderivative(&self, s: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => value * s,
            Profile::Decaying { amplitude } => amplitude * s.atan(),
            Profile::Bump { .. } | Profile::Plateau { .. } => {
                let (lo, hi) = self.support().unwrap_or((0.0, 0.0));
                // integrate over [0, s] ∩ support, keeping the orientation
                let (a, b, sign) = if s >= 0.0 {
                    (0.0, s, 1.0)
                } else {
                    (s, 0.0, -1.0)
                };
                let a = a.max(lo);
                let b = b.min(hi);
                if b <= a {
                    return 0.0;
                }
                sign * quadrature::integrate(|x| self.value(x), a, b, 32)
            }
        }
    }
}

/// `∫ f g ds` for two profiles where at least one has compact support.
pub fn product_integral(f: &Profile, g: &Profile) -> Option<f64> {
    let (lo, hi) = match (f.support(), g.support()) {
        (Some((a, b)), Some((c, d))) => (a.max(c), b.min(d)),
        (Some(s), None) | (None, Some(s)) => s,
        (None, None) => return None,
    };
    if hi <= lo {
        return Some(0.0);
    }
    Some(quadrature::integrate(
        |s| f.value(s) * g.value(s),
        lo,
        hi,
        64,
    ))
}

fn plateau_kernel(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = plateau_kernel(x);
        a / (a + plateau_kernel(1.0 - x))
    }
}

fn smooth_step_derivative(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        let a = plateau_kernel(x);
        let b = plateau_kernel(1.0 - x);
        let da = a / (x * x);
        let db = -b / ((1.0 - x) * (1.0 - x));
        (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Profile::Zero => write!(f, "zero"),
            Profile::Constant { value } => write!(f, "constant {value}"),
            Profile::Bump {
                center,
                width,
                amplitude,
            } => write!(f, "bump {center} {width} {amplitude}"),
            Profile::Plateau {
                half_length,
                taper,
                amplitude,
            } => write!(f, "plateau {half_length} {taper} {amplitude}"),
            Profile::Decaying { amplitude } => write!(f, "decaying {amplitude}"),
        }
    }
}

/// Parses `"<family> <params…>"`, e.g. `"bump 0 2 0.5"` (centre, width,
/// amplitude), `"plateau 2 1 1"` (half length, taper, amplitude),
/// `"decaying 0.3"`, `"constant 1"`, `"zero"`.
impl FromStr for Profile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut parts = text.split_whitespace();
        let family = parts
            .next()
            .ok_or_else(|| Error::Input("empty profile description".into()))?;
        let params: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::Input(format!("bad profile parameter '{p}' in '{text}'")))
            })
            .collect::<Result<_>>()?;
        let want = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Input(format!(
                    "profile '{family}' takes {n} parameters, got {} in '{text}'",
                    params.len()
                )))
            }
        };
        let profile = match family {
            "zero" => {
                want(0)?;
                Profile::Zero
            }
            "constant" => {
                want(1)?;
                Profile::Constant { value: params[0] }
            }
            "bump" => {
                want(3)?;
                Profile::Bump {
                    center: params[0],
                    width: params[1],
                    amplitude: params[2],
                }
            }
            "plateau" => {
                want(3)?;
                Profile::Plateau {
                    half_length: params[0],
                    taper: params[1],
                    amplitude: params[2],
                }
            }
            "decaying" => {
                want(1)?;
                Profile::Decaying {
                    amplitude: params[0],
                }
            }
            other => {
                return Err(Error::Input(format!(
                    "unknown profile family '{other}' (expected zero, constant, bump, plateau, decaying)"
                )))
            }
        };
        profile.validate()?;
        Ok(profile)
    }
}

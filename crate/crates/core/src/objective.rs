//! Annual energy production of a density field and its analytic gradient.
//!
//! Indices: `i` is the wind-direction bin, `j`/`k`/`m` are sites. The
//! interpolated density enters both the power sum and the wake
//! superposition, so the objective is a function of the interpolated field
//! composed with the interpolation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::farm::{TurbineSpec, WindRose};
use crate::wake::DeficitTensor;

pub const HOURS_PER_YEAR: f64 = 8760.0;

/// MW sustained for a year, expressed in GWh.
const MW_YEAR_IN_GWH: f64 = HOURS_PER_YEAR / 1000.0;

/// Floor on the total loss in the gradient's `1 / (2 L)` factor.
pub const LOSS_FLOOR: f64 = 1e-12;

/// Relaxed existence indicator per site, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignVector(Vec<f64>);

impl DesignVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid(format!(
                "density {i} = {} outside [0, 1]",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn from_binary(bits: &[bool]) -> Self {
        Self(bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Density interpolation (penalization) function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InterpolationScheme {
    /// `rho / (1 + q (1 - rho))`
    Ramp { q: f64 },
    /// `rho^p`
    Simp { p: f64 },
    Linear,
}

impl InterpolationScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Ramp { q } if !(q.is_finite() && q >= 0.0) => {
                Err(invalid(format!("RAMP penalty must be >= 0, got {q}")))
            }
            Self::Simp { p } if !(p.is_finite() && p >= 1.0) => {
                Err(invalid(format!("SIMP exponent must be >= 1, got {p}")))
            }
            _ => Ok(()),
        }
    }

    /// The scheme's penalty parameter (`q` for RAMP, `p` for SIMP).
    pub fn penalty(&self) -> f64 {
        match *self {
            Self::Ramp { q } => q,
            Self::Simp { p } => p,
            Self::Linear => 0.0,
        }
    }

    /// Same family with a new penalty parameter.
    pub fn with_penalty(&self, value: f64) -> Self {
        match self {
            Self::Ramp { .. } => Self::Ramp { q: value },
            Self::Simp { .. } => Self::Simp { p: value },
            Self::Linear => Self::Linear,
        }
    }

    /// Value and derivative, without range checks.
    #[inline]
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        match *self {
            Self::Ramp { q } => {
                let den = 1.0 + q * (1.0 - rho);
                (rho / den, (1.0 + q) / (den * den))
            }
            Self::Simp { p } => {
                if rho == 0.0 {
                    (0.0, if p == 1.0 { 1.0 } else { 0.0 })
                } else {
                    (rho.powf(p), p * rho.powf(p - 1.0))
                }
            }
            Self::Linear => (rho, 1.0),
        }
    }
}

/// Interpolated density and `d(rho~)/d(rho)`.
pub fn interpolate(rho: f64, scheme: &InterpolationScheme) -> Result<(f64, f64)> {
    scheme.validate()?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid(format!("density {rho} outside [0, 1]")));
    }
    Ok(scheme.eval(rho))
}

/// Total wake loss at each site: root-sum-square of density-weighted
/// single-wake deficits (unclamped).
fn total_losses(rho_tilde: &[f64], tensor: &DeficitTensor, direction: usize) -> Vec<f64> {
    let w = tensor.direction(direction);
    (0..tensor.sites())
        .map(|j| {
            let row = w.row(j);
            w.upstream(j)
                .iter()
                .map(|&k| rho_tilde[k] * row[k] * row[k])
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Effective wind speed at every site for one direction bin.
pub fn effective_speeds(
    rho_tilde: &[f64],
    tensor: &DeficitTensor,
    direction: usize,
    free_stream: f64,
) -> Result<Vec<f64>> {
    check_len("interpolated densities", tensor.sites(), rho_tilde.len())?;
    if direction >= tensor.bins() {
        return Err(invalid(format!(
            "direction index {direction} out of range ({} bins)",
            tensor.bins()
        )));
    }
    Ok(total_losses(rho_tilde, tensor, direction)
        .into_iter()
        .map(|l| free_stream * (1.0 - l.min(1.0)))
        .collect())
}

/// Power [MW] and `dP/dV` [MW s/m] from the piecewise cubic power curve.
/// At breakpoints the derivative is taken from the left.
pub fn turbine_power(speed: f64, turbine: &TurbineSpec) -> (f64, f64) {
    let TurbineSpec {
        rated_power,
        cut_in,
        rated_speed,
        cut_out,
        ..
    } = *turbine;
    if speed < cut_in || speed >= cut_out {
        (0.0, 0.0)
    } else if speed < rated_speed {
        let span = rated_speed - cut_in;
        let r = (speed - cut_in) / span;
        (rated_power * r * r * r, 3.0 * rated_power * r * r / span)
    } else if speed == rated_speed {
        (rated_power, 3.0 * rated_power / (rated_speed - cut_in))
    } else {
        (rated_power, 0.0)
    }
}

/// Farm power [MW] for one direction bin.
pub fn farm_power(
    rho_tilde: &[f64],
    tensor: &DeficitTensor,
    rose: &WindRose,
    turbine: &TurbineSpec,
    direction: usize,
) -> Result<f64> {
    check_len("wind rose bins", tensor.bins(), rose.len())?;
    let speeds = effective_speeds(
        rho_tilde,
        tensor,
        direction,
        rose.bins()[direction].speed,
    )?;
    Ok(rho_tilde
        .iter()
        .zip(&speeds)
        .map(|(r, &v)| r * turbine_power(v, turbine).0)
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveReport {
    /// Annual energy production [GWh/year].
    pub aep_gwh: f64,
    /// Farm power per direction bin [MW].
    pub direction_power_mw: Vec<f64>,
    /// Gradient of `f = -AEP` with respect to the raw densities
    /// [GWh/year per unit density].
    pub gradient: Vec<f64>,
}

impl ObjectiveReport {
    /// Objective value `f = -AEP`.
    pub fn objective(&self) -> f64 {
        -self.aep_gwh
    }
}

fn check_inputs(n: usize, tensor: &DeficitTensor, rose: &WindRose) -> Result<()> {
    check_len("design length", tensor.sites(), n)?;
    check_len("wind rose bins", tensor.bins(), rose.len())
}

/// AEP, per-direction farm power and the gradient of `-AEP`.
pub fn aep(
    rho: &DesignVector,
    scheme: &InterpolationScheme,
    tensor: &DeficitTensor,
    rose: &WindRose,
    turbine: &TurbineSpec,
) -> Result<ObjectiveReport> {
    scheme.validate()?;
    check_inputs(rho.len(), tensor, rose)?;
    Ok(evaluate(rho.as_slice(), scheme, tensor, rose, turbine, true))
}

/// AEP only, skipping the gradient.
pub fn aep_value(
    rho: &DesignVector,
    scheme: &InterpolationScheme,
    tensor: &DeficitTensor,
    rose: &WindRose,
    turbine: &TurbineSpec,
) -> Result<f64> {
    scheme.validate()?;
    check_inputs(rho.len(), tensor, rose)?;
    Ok(evaluate(rho.as_slice(), scheme, tensor, rose, turbine, false).aep_gwh)
}

pub(crate) fn evaluate(
    rho: &[f64],
    scheme: &InterpolationScheme,
    tensor: &DeficitTensor,
    rose: &WindRose,
    turbine: &TurbineSpec,
    with_gradient: bool,
) -> ObjectiveReport {
    let n = rho.len();
    let (rho_tilde, slope): (Vec<f64>, Vec<f64>) = rho.iter().map(|&r| scheme.eval(r)).unzip();

    // per-direction (power, d power / d rho~), reduced in bin order below
    let per_direction: Vec<(f64, Vec<f64>)> = (0..rose.len())
        .into_par_iter()
        .map(|i| {
            let free_stream = rose.bins()[i].speed;
            let w = tensor.direction(i);
            let losses = total_losses(&rho_tilde, tensor, i);
            let mut power = 0.0;
            let mut dpower = if with_gradient { vec![0.0; n] } else { Vec::new() };
            for j in 0..n {
                let loss = losses[j];
                let speed = free_stream * (1.0 - loss.min(1.0));
                let (p, dp_dv) = turbine_power(speed, turbine);
                power += rho_tilde[j] * p;
                if !with_gradient {
                    continue;
                }
                dpower[j] += p;
                if loss >= 1.0 || dp_dv == 0.0 || rho_tilde[j] == 0.0 {
                    continue;
                }
                // d V_j / d rho~_k = -V_inf W_jk^2 / (2 L_j)
                let coeff = rho_tilde[j] * dp_dv * free_stream / (2.0 * loss.max(LOSS_FLOOR));
                let row = w.row(j);
                for &k in w.upstream(j) {
                    dpower[k] -= coeff * row[k] * row[k];
                }
            }
            (power, dpower)
        })
        .collect();

    let mut weighted_mw = 0.0;
    let mut gradient = vec![0.0; if with_gradient { n } else { 0 }];
    let mut direction_power_mw = Vec::with_capacity(rose.len());
    for (bin, (power, dpower)) in rose.bins().iter().zip(per_direction) {
        weighted_mw += bin.frequency * power;
        direction_power_mw.push(power);
        for (g, dp) in gradient.iter_mut().zip(&dpower) {
            *g += bin.frequency * dp;
        }
    }
    for (g, s) in gradient.iter_mut().zip(&slope) {
        *g *= -MW_YEAR_IN_GWH * s;
    }
    ObjectiveReport {
        aep_gwh: weighted_mw * MW_YEAR_IN_GWH,
        direction_power_mw,
        gradient,
    }
}

/// AEP [GWh] of a binary layout, computed over selected sites only.
pub fn aep_binary(
    selected: &[bool],
    tensor: &DeficitTensor,
    rose: &WindRose,
    turbine: &TurbineSpec,
) -> Result<f64> {
    check_inputs(selected.len(), tensor, rose)?;
    let on: Vec<usize> = (0..selected.len()).filter(|&i| selected[i]).collect();
    Ok(aep_of_sites(&on, tensor, rose, turbine))
}

pub(crate) fn aep_of_sites(
    on: &[usize],
    tensor: &DeficitTensor,
    rose: &WindRose,
    turbine: &TurbineSpec,
) -> f64 {
    let mut weighted_mw = 0.0;
    for (i, bin) in rose.bins().iter().enumerate() {
        let w = tensor.direction(i);
        let mut power = 0.0;
        for &j in on {
            let row = w.row(j);
            let loss = on.iter().map(|&k| row[k] * row[k]).sum::<f64>().sqrt();
            power += turbine_power(bin.speed * (1.0 - loss.min(1.0)), turbine).0;
        }
        weighted_mw += bin.frequency * power;
    }
    weighted_mw * MW_YEAR_IN_GWH
}

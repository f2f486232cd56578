//! Seeded sampling of initial conditions.
//!
//! Generator: ChaCha8 seeded with `seed_from_u64(seed)`; sample `i` draws
//! from its own stream (`set_stream(i)`), so the draws of one sample never
//! depend on how many others exist or on the order they are evaluated in.
//! Positions are uniform for the Riemannian volume of the chart box
//! (rejection against `sqrt(det g)`), directions are normalized standard
//! Gaussians in an orthonormal basis, hence uniform on the unit sphere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ChartPoint, MetricModel, ModelKind, TangentVector};

/// Grid points per axis used to bound the volume density of a window.
const DENSITY_GRID: usize = 9;
const DENSITY_MARGIN: f64 = 1.25;
const MAX_REJECTIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampler {
    /// Uniform on the flat torus `[0,1)^n`.
    TorusUniform,
    /// Volume-uniform on a chart box; for frame-only models a 1-D window of
    /// orbit phases.
    WindowUniform { lo: Vec<f64>, hi: Vec<f64> },
    /// Given initial conditions, normalized to unit speed.
    Explicit { thetas: Vec<TangentVector> },
}

impl Sampler {
    pub fn name(&self) -> &'static str {
        match self {
            Sampler::TorusUniform => "torus_uniform",
            Sampler::WindowUniform { .. } => "window_uniform",
            Sampler::Explicit { .. } => "explicit",
        }
    }

    fn mismatch(&self, model: &MetricModel) -> Error {
        Error::SamplerMismatch {
            sampler: self.name().into(),
            model: model.to_string(),
        }
    }

    /// Compatibility of the sampler with `model` for `n` samples.
    pub fn check(&self, model: &MetricModel, n: usize) -> Result<()> {
        match self {
            Sampler::TorusUniform => {
                if !matches!(model.kind, ModelKind::FlatTorus { .. }) {
                    return Err(self.mismatch(model));
                }
            }
            Sampler::WindowUniform { lo, hi } => {
                let d = if model.is_chart() { model.dim() } else { 1 };
                if lo.len() != d
                    || hi.len() != d
                    || lo
                        .iter()
                        .zip(hi)
                        .any(|(a, b)| !(a < b) || !b.is_finite() || !a.is_finite())
                {
                    return Err(self.mismatch(model));
                }
                if model.is_chart() && window_grid(lo, hi).iter().any(|x| !model.in_domain(x)) {
                    return Err(self.mismatch(model));
                }
            }
            Sampler::Explicit { thetas } => {
                if thetas.len() != n {
                    return Err(Error::Config {
                        path: "ensemble.size".into(),
                        message: format!("explicit sampler lists {} thetas", thetas.len()),
                    });
                }
                for theta in thetas {
                    if model.is_chart() {
                        model
                            .unit_tangent(&theta.base, &theta.v)
                            .map_err(|_| self.mismatch(model))?;
                    } else if theta.base.coords.len() != 1 {
                        return Err(self.mismatch(model));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether this ensemble covers only part of a noncompact or larger space.
    pub fn window_restricted(&self, model: &MetricModel) -> bool {
        matches!(self, Sampler::WindowUniform { .. }) && model.is_chart()
    }
}

/// Tensor grid of `DENSITY_GRID` points per axis spanning the box.
fn window_grid(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for (a, b) in lo.iter().zip(hi) {
        let mut next = Vec::with_capacity(points.len() * DENSITY_GRID);
        for p in &points {
            for k in 0..DENSITY_GRID {
                let mut q = p.clone();
                q.push(a + (b - a) * k as f64 / (DENSITY_GRID - 1) as f64);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

fn volume_density(model: &MetricModel, x: &[f64], g: &mut [f64]) -> f64 {
    model.metric_diag_into(x, g);
    g.iter().product::<f64>().sqrt()
}

fn random_direction(model: &MetricModel, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = model.dim();
    let mut g = vec![0.0; n];
    model.metric_diag_into(x, &mut g);
    loop {
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = z.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return z
                .iter()
                .zip(&g)
                .map(|(c, gi)| c / (norm * gi.sqrt()))
                .collect();
        }
    }
}

/// `n` unit tangent vectors, reproducible from `seed`.
pub fn sample_unit_tangent(
    model: &MetricModel,
    n: usize,
    seed: u64,
    sampler: &Sampler,
) -> Result<Vec<TangentVector>> {
    sampler.check(model, n)?;
    let rng_for = |i: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        rng
    };
    match sampler {
        Sampler::Explicit { thetas } => thetas
            .iter()
            .map(|t| {
                if model.is_chart() {
                    model.unit_tangent(&t.base, &t.v)
                } else {
                    Ok(t.clone())
                }
            })
            .collect(),
        Sampler::TorusUniform => (0..n)
            .map(|i| {
                let mut rng = rng_for(i);
                let x: Vec<f64> = (0..model.dim()).map(|_| rng.random::<f64>()).collect();
                let v = random_direction(model, &x, &mut rng);
                Ok(TangentVector::new(x, v))
            })
            .collect(),
        Sampler::WindowUniform { lo, hi } if !model.is_chart() => Ok((0..n)
            .map(|i| TangentVector::phase(rng_for(i).random_range(lo[0]..hi[0])))
            .collect()),
        Sampler::WindowUniform { lo, hi } => {
            let mut g = vec![0.0; model.dim()];
            let bound = window_grid(lo, hi)
                .iter()
                .map(|x| volume_density(model, x, &mut g))
                .fold(0.0, f64::max)
                * DENSITY_MARGIN;
            (0..n)
                .map(|i| {
                    let mut rng = rng_for(i);
                    for _ in 0..MAX_REJECTIONS {
                        let x: Vec<f64> = lo
                            .iter()
                            .zip(hi)
                            .map(|(a, b)| rng.random_range(*a..*b))
                            .collect();
                        if rng.random::<f64>() * bound <= volume_density(model, &x, &mut g) {
                            let v = random_direction(model, &x, &mut rng);
                            return model.unit_tangent(&ChartPoint::new(x), &v);
                        }
                    }
                    Err(Error::DegenerateInput(
                        "volume rejection sampling stalled".into(),
                    ))
                })
                .collect()
        }
    }
}

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Meridian profile `f(u)` of a surface of revolution `du^2 + f(u)^2 dv^2`,
/// with `u` the arc length along the meridian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ProfileShape {
    /// `f(u) = cosh u + offset`. With `offset = 0` the surface has `K = -1`;
    /// a positive offset gives pinched variable curvature in `[-1, -1/(1+offset)]`.
    Cosh {
        #[serde(default)]
        offset: f64,
    },
    /// Torus of revolution: `f(u) = major + minor cos(u / minor)`.
    Torus { major: f64, minor: f64 },
}

impl ProfileShape {
    /// `(f, f', f'')` at `u`.
    #[inline]
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        match *self {
            ProfileShape::Cosh { offset } => {
                let (s, c) = (u.sinh(), u.cosh());
                (c + offset, s, c)
            }
            ProfileShape::Torus { major, minor } => {
                let (s, c) = (u / minor).sin_cos();
                (major + minor * c, -s, -c / minor)
            }
        }
    }

    /// Gaussian curvature `-f''/f` at `u`.
    #[inline]
    pub fn curvature(&self, u: f64) -> f64 {
        match *self {
            // written as a ratio so it stays finite far out on the cosh flare
            ProfileShape::Cosh { offset } => -1.0 / (1.0 + offset / u.cosh()),
            _ => {
                let (f, _, fpp) = self.eval(u);
                -fpp / f
            }
        }
    }

    /// `(inf K, sup K)` over the whole meridian.
    pub fn curvature_range(&self) -> (f64, f64) {
        match *self {
            ProfileShape::Cosh { offset } => {
                let at_neck = -1.0 / (1.0 + offset);
                (at_neck.min(-1.0), at_neck.max(-1.0))
            }
            ProfileShape::Torus { major, minor } => (
                -1.0 / (minor * (major - minor)),
                1.0 / (minor * (major + minor)),
            ),
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            ProfileShape::Cosh { offset } => offset > -1.0 && offset.is_finite(),
            ProfileShape::Torus { major, minor } => minor > 0.0 && major > minor,
        }
    }
}

/// Surface of revolution with chart `(u, v)`, `v` an angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevolutionProfile {
    #[serde(flatten)]
    pub shape: ProfileShape,
    /// Chart domain in `u`; the cosh flare overflows beyond a few hundred.
    #[serde(default = "default_u_bounds")]
    pub u_bounds: (f64, f64),
}

fn default_u_bounds() -> (f64, f64) {
    (-300.0, 300.0)
}

impl RevolutionProfile {
    pub fn new(shape: ProfileShape) -> Self {
        RevolutionProfile {
            shape,
            u_bounds: default_u_bounds(),
        }
    }
}

/// One harmonic term `amplitude * sin(frequency * t + phase)` added to the
/// symmetric entry pair `(row, col)`, `(col, row)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub row: usize,
    pub col: usize,
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Prescribed curvature endomorphism along a single geodesic:
/// `R(t) = Q(t) (B + sum of modes) Q(t)^T`, with `Q(t)` a rotation by
/// `rotation_rate * t` in the first coordinate plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    /// Manifold dimension `n`; matrices are `(n-1) x (n-1)`.
    pub dim: usize,
    pub base: Vec<Vec<f64>>,
    #[serde(default)]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub rotation_rate: f64,
    /// Declared period, if the profile is periodic.
    #[serde(default)]
    pub period: Option<f64>,
}

impl SyntheticProfile {
    pub fn constant_diagonal(dim: usize, diag: &[f64]) -> Self {
        assert_eq!(diag.len() + 1, dim, "diagonal must have n-1 entries");
        let m = dim - 1;
        let base = (0..m)
            .map(|i| (0..m).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
            .collect();
        SyntheticProfile {
            dim,
            base,
            modes: Vec::new(),
            rotation_rate: 0.0,
            period: None,
        }
    }

    /// `R(t) = (mean + amplitude sin(frequency t)) I`.
    pub fn scalar_wave(dim: usize, mean: f64, amplitude: f64, frequency: f64) -> Self {
        let m = dim - 1;
        let mut p = Self::constant_diagonal(dim, &vec![mean; m]);
        p.modes = (0..m)
            .map(|i| Mode {
                row: i,
                col: i,
                amplitude,
                frequency,
                phase: 0.0,
            })
            .collect();
        if frequency != 0.0 {
            p.period = Some(2.0 * PI / frequency.abs());
        }
        p
    }

    /// Random profile whose eigenvalues stay inside `[lo, hi]` for all `t`.
    ///
    /// Diagonal entries oscillate around a random mean with total amplitude
    /// below the distance to the nearer bound; the optional rotation does not
    /// change the spectrum. With `period = Some(tau)` every frequency is an
    /// integer multiple of `2 pi / tau` and the rotation closes up after `tau`.
    pub fn random_pinched<R: Rng + ?Sized>(
        rng: &mut R,
        dim: usize,
        lo: f64,
        hi: f64,
        period: Option<f64>,
    ) -> Self {
        assert!(dim >= 2 && hi > lo);
        let m = dim - 1;
        let margin = 0.1 * (hi - lo);
        let mut diag = Vec::with_capacity(m);
        let mut modes = Vec::new();
        for i in 0..m {
            let mean = rng.random_range((lo + margin)..(hi - margin));
            let room = (mean - lo).min(hi - mean);
            let total = room * rng.random_range(0.5..0.95);
            let split = rng.random_range(0.2..0.8);
            for weight in [split, 1.0 - split] {
                let frequency = match period {
                    Some(tau) => rng.random_range(1..=3) as f64 * 2.0 * PI / tau,
                    None => rng.random_range(0.3..2.0),
                };
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                modes.push(Mode {
                    row: i,
                    col: i,
                    amplitude: sign * total * weight,
                    frequency,
                    phase: rng.random_range(0.0..2.0 * PI),
                });
            }
            diag.push(mean);
        }
        let rotation_rate = if m >= 2 {
            match period {
                Some(tau) => rng.random_range(0..=2) as f64 * PI / tau,
                None => rng.random_range(0.0..0.5),
            }
        } else {
            0.0
        };
        let mut p = Self::constant_diagonal(dim, &diag);
        p.modes = modes;
        p.rotation_rate = rotation_rate;
        p.period = period;
        p
    }

    pub fn normal_dim(&self) -> usize {
        self.dim - 1
    }

    pub fn is_valid(&self) -> bool {
        let m = self.normal_dim();
        self.dim >= 2
            && self.base.len() == m
            && self.base.iter().all(|row| row.len() == m)
            && (0..m).all(|i| (0..m).all(|j| self.base[i][j] == self.base[j][i]))
            && self
                .modes
                .iter()
                .all(|md| md.row < m && md.col < m && md.frequency.is_finite())
    }

    /// Writes `R(t)` row-major into `out` (length `(n-1)^2`).
    #[inline]
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let m = self.normal_dim();
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = self.base[i][j];
            }
        }
        for md in &self.modes {
            let value = md.amplitude * (md.frequency * t + md.phase).sin();
            out[md.row * m + md.col] += value;
            if md.row != md.col {
                out[md.col * m + md.row] += value;
            }
        }
        if m >= 2 && self.rotation_rate != 0.0 {
            let (s, c) = (self.rotation_rate * t).sin_cos();
            // rows then columns of the (0,1) plane: R <- Q R Q^T
            for j in 0..m {
                let (a, b) = (out[j], out[m + j]);
                out[j] = c * a - s * b;
                out[m + j] = s * a + c * b;
            }
            for i in 0..m {
                let (a, b) = (out[i * m], out[i * m + 1]);
                out[i * m] = c * a - s * b;
                out[i * m + 1] = s * a + c * b;
            }
        }
    }
}

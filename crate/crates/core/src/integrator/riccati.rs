//! Riccati propagation with conjugate-point detection.
//!
//! `U' + U^2 + R = 0` is integrated directly while `|U|` is moderate. Once
//! `|U| h` grows large (approaching a blow-up, or right after a focal seed
//! `Y = 0`) the run switches to the linear Jacobi form `Y = I, Y' = U`,
//! which passes through conjugate points without difficulty. A conjugate
//! point is a zero of `det Y`; it is located as a drop in the number of
//! negative eigenvalues of `S = Y^T Y'` (congruent to `U`) while `|U|` is
//! large, then refined by bisection on the sub-step length.

use crate::error::Result;
use crate::linalg;

use super::track::{jacobi_rhs, riccati_rhs, CurvatureStream, Rk4};
use super::IntegratorConfig;

/// Enter the Jacobi form when `|U|_F * h` exceeds this.
const ENTER_JACOBI: f64 = 0.05;
/// Return to the Riccati form when `|U|_F * h` drops below this.
const LEAVE_JACOBI: f64 = 0.01;
/// A negative-count drop only counts as a conjugate point when `|U| h` is at least this.
const CONJUGATE_GATE: f64 = 0.1;
/// Jacobi columns are renormalized once they grow past this.
const JACOBI_RESCALE: f64 = 1e8;
const BISECTION_STEPS: usize = 48;

pub(crate) struct NodeView<'s> {
    /// Time since the start of the run.
    pub elapsed: f64,
    pub u: &'s [f64],
    pub int_tr_u: f64,
    pub int_ric: f64,
}

pub(crate) enum RiccatiStart<'s> {
    Value(&'s [f64]),
    /// `Y = 0, Y' = I` at the start (unstable/stable seeds, conjugate-point probes).
    Focal,
}

#[derive(Debug, Clone)]
pub(crate) struct RiccatiEnd {
    pub u: Vec<f64>,
    pub int_tr_u: f64,
}

pub(crate) enum RiccatiRun {
    Done(RiccatiEnd),
    /// Orbit time of the conjugate point.
    Conjugate(f64),
}

enum Mode {
    Riccati,
    Jacobi,
}

struct JacobiForm {
    /// `[Y, Y', int Ric]`.
    state: Vec<f64>,
    /// `int tr U` accumulated up to the last renormalization (`Y = I` there).
    base_tr: f64,
}

impl JacobiForm {
    fn from_u(u: &[f64], m: usize, base_tr: f64, int_ric: f64) -> Self {
        let mm = m * m;
        let mut state = vec![0.0; 2 * mm + 1];
        state[..mm].copy_from_slice(&linalg::identity(m));
        state[mm..2 * mm].copy_from_slice(u);
        state[2 * mm] = int_ric;
        JacobiForm { state, base_tr }
    }

    fn focal(m: usize) -> Self {
        let mm = m * m;
        let mut state = vec![0.0; 2 * mm + 1];
        state[mm..2 * mm].copy_from_slice(&linalg::identity(m));
        JacobiForm {
            state,
            base_tr: 0.0,
        }
    }

    fn y(&self, m: usize) -> &[f64] {
        &self.state[..m * m]
    }

    fn yp(&self, m: usize) -> &[f64] {
        &self.state[m * m..2 * m * m]
    }

    /// `U = Y' Y^{-1}` when `Y` is invertible.
    fn u(&self, m: usize) -> Option<Vec<f64>> {
        let inv = linalg::inverse(self.y(m), m)?;
        let mut u = vec![0.0; m * m];
        linalg::matmul(self.yp(m), &inv, m, m, m, &mut u);
        linalg::symmetrize(&mut u, m);
        Some(u)
    }

    fn log_det(&self, m: usize) -> f64 {
        let y = linalg::to_dmatrix(self.y(m), m, m);
        y.determinant().abs().ln()
    }

    fn int_tr_u(&self, m: usize) -> f64 {
        self.base_tr + self.log_det(m)
    }

    fn negative_count(&self, m: usize) -> usize {
        let mut s = vec![0.0; m * m];
        let y = self.y(m);
        let yp = self.yp(m);
        for i in 0..m {
            for j in 0..m {
                let mut acc = 0.0;
                for l in 0..m {
                    acc += y[l * m + i] * yp[l * m + j];
                }
                s[i * m + j] = acc;
            }
        }
        linalg::symmetrize(&mut s, m);
        linalg::negative_count(&s, m)
    }

    fn u_norm(&self, m: usize) -> f64 {
        self.u(m).map_or(f64::INFINITY, |u| linalg::frobenius(&u))
    }

    /// Resets `Y` to the identity, keeping `U` and the trace integral.
    fn renormalize(&mut self, m: usize) -> bool {
        let Some(u) = self.u(m) else { return false };
        self.base_tr = self.int_tr_u(m);
        let mm = m * m;
        self.state[..mm].copy_from_slice(&linalg::identity(m));
        self.state[mm..2 * mm].copy_from_slice(&u);
        true
    }
}

/// Integrates for `steps` steps of `cfg.dt`, calling `observe` at every node
/// after the first step.
pub(crate) fn run_riccati<F>(
    stream: &mut CurvatureStream,
    start: RiccatiStart,
    steps: usize,
    cfg: &IntegratorConfig,
    mut observe: F,
) -> Result<RiccatiRun>
where
    F: FnMut(&NodeView),
{
    let m = stream.m();
    let mm = m * m;
    let h = cfg.dt;
    let enter = (ENTER_JACOBI / h).min(cfg.blowup_threshold);

    let mut ric_state = vec![0.0; mm + 2];
    let mut jac = JacobiForm::focal(m);
    let mut mode = match start {
        RiccatiStart::Value(u0) => {
            ric_state[..mm].copy_from_slice(u0);
            if linalg::frobenius(u0) > enter {
                jac = JacobiForm::from_u(u0, m, 0.0, 0.0);
                Mode::Jacobi
            } else {
                Mode::Riccati
            }
        }
        RiccatiStart::Focal => Mode::Jacobi,
    };
    let mut ric_rk = Rk4::new(mm + 2);
    let mut jac_rk = Rk4::new(2 * mm + 1);
    let mut node_u = vec![0.0; mm];
    let mut saved = vec![0.0; 2 * mm + 1];

    for k in 0..steps {
        match mode {
            Mode::Riccati => {
                if linalg::frobenius(&ric_state[..mm]) > enter {
                    jac = JacobiForm::from_u(&ric_state[..mm], m, ric_state[mm], ric_state[mm + 1]);
                    mode = Mode::Jacobi;
                }
            }
            Mode::Jacobi => {}
        }
        match mode {
            Mode::Riccati => {
                stream.advance(h)?;
                ric_rk.step(&mut ric_state, h, stream, |r, y, out| {
                    riccati_rhs(m, r, y, out)
                });
                if cfg.symmetrize_each_step {
                    linalg::symmetrize(&mut ric_state[..mm], m);
                }
                node_u.copy_from_slice(&ric_state[..mm]);
                observe(&NodeView {
                    elapsed: (k + 1) as f64 * h,
                    u: &node_u,
                    int_tr_u: ric_state[mm],
                    int_ric: ric_state[mm + 1],
                });
            }
            Mode::Jacobi => {
                let before_count = jac.negative_count(m);
                let before_norm = jac.u_norm(m);
                saved.copy_from_slice(&jac.state);
                stream.advance(h)?;
                jac_rk.step(&mut jac.state, h, stream, |r, y, out| {
                    jacobi_rhs(m, m, r, y, out)
                });
                let after_count = jac.negative_count(m);
                let after_norm = jac.u_norm(m);
                if after_count < before_count && before_norm.max(after_norm) * h >= CONJUGATE_GATE {
                    let t_star =
                        stream.t() - h + refine_crossing(stream, &saved, before_count, h, m);
                    return Ok(RiccatiRun::Conjugate(t_star));
                }
                if jac.y(m).iter().any(|c| c.abs() > JACOBI_RESCALE) {
                    jac.renormalize(m);
                }
                if let Some(u) = jac.u(m) {
                    let int_tr = jac.int_tr_u(m);
                    let int_ric = jac.state[2 * mm];
                    observe(&NodeView {
                        elapsed: (k + 1) as f64 * h,
                        u: &u,
                        int_tr_u: int_tr,
                        int_ric,
                    });
                    if linalg::frobenius(&u) * h < LEAVE_JACOBI {
                        ric_state[..mm].copy_from_slice(&u);
                        ric_state[mm] = int_tr;
                        ric_state[mm + 1] = int_ric;
                        mode = Mode::Riccati;
                    }
                }
            }
        }
        stream.commit();
    }

    let end = match mode {
        Mode::Riccati => RiccatiEnd {
            u: ric_state[..mm].to_vec(),
            int_tr_u: ric_state[mm],
        },
        Mode::Jacobi => match jac.u(m) {
            Some(u) => RiccatiEnd {
                int_tr_u: jac.int_tr_u(m),
                u,
            },
            // singular exactly at the final node
            None => return Ok(RiccatiRun::Conjugate(stream.t())),
        },
    };
    Ok(RiccatiRun::Done(end))
}

/// Bisection on the sub-step length for the step where the negative count
/// drops. `R` inside the step comes from the quadratic through the three
/// samples of the step.
fn refine_crossing(
    stream: &CurvatureStream,
    state: &[f64],
    before_count: usize,
    h: f64,
    m: usize,
) -> f64 {
    let mm = m * m;
    let interp = |s: f64, out: &mut [f64]| {
        let x = s / h;
        let (l0, l1, l2) = (
            2.0 * (x - 0.5) * (x - 1.0),
            -4.0 * x * (x - 1.0),
            2.0 * x * (x - 0.5),
        );
        for (i, o) in out[..mm].iter_mut().enumerate() {
            *o = l0 * stream.r0[i] + l1 * stream.rh[i] + l2 * stream.r1[i];
        }
    };
    let (mut ra, mut rb) = (vec![0.0; mm], vec![0.0; mm]);
    let (mut lo, mut hi) = (0.0, h);
    let mut rk = Rk4::new(state.len());
    let mut y = state.to_vec();
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        interp(0.5 * mid, &mut ra);
        interp(mid, &mut rb);
        y.copy_from_slice(state);
        rk.step_with(&mut y, mid, [&stream.r0, &ra, &rb], |r, st, out| {
            jacobi_rhs(m, m, r, st, out)
        });
        let probe = JacobiForm {
            state: y.clone(),
            base_tr: 0.0,
        };
        if probe.negative_count(m) < before_count {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

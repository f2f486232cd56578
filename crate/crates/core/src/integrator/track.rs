//! Geodesic transport feeding curvature samples to the linear propagators.
//!
//! A [`Track`] follows one geodesic (chart models) or one clock (frame-only
//! models) and evaluates `R(t)` on demand. [`CurvatureStream`] advances the
//! track in half steps so that each RK4 step of a payload equation sees
//! `R` at `t`, `t + h/2` and `t + h`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::models::MetricModel;

use super::IntegratorConfig;

#[derive(Debug, Clone)]
pub(crate) struct Track<'a> {
    pub model: &'a MetricModel,
    pub n: usize,
    pub m: usize,
    /// Chart state `[x (n), v (n), frame (m * n)]`; empty for frame-only models.
    pub geo: Vec<f64>,
    pub t: f64,
    /// Frame-only models see `R(origin + sign * t)`.
    pub origin: f64,
    pub sign: f64,
    pub steps_since_reortho: usize,
    reortho_every: usize,
    ws: [Vec<f64>; 5],
    gamma: Vec<f64>,
    gdiag: Vec<f64>,
}

impl<'a> Track<'a> {
    /// Track starting at a chart state (already unit speed with an orthonormal frame).
    pub fn chart(
        model: &'a MetricModel,
        x: &[f64],
        v: &[f64],
        frame: &[f64],
        t: f64,
        cfg: &IntegratorConfig,
    ) -> Self {
        let n = model.dim();
        let m = n - 1;
        let mut geo = Vec::with_capacity(n * (m + 2));
        geo.extend_from_slice(x);
        geo.extend_from_slice(v);
        geo.extend_from_slice(frame);
        let len = geo.len();
        Track {
            model,
            n,
            m,
            geo,
            t,
            origin: 0.0,
            sign: 1.0,
            steps_since_reortho: 0,
            reortho_every: cfg.frame_reortho_every.max(1),
            ws: std::array::from_fn(|_| vec![0.0; len]),
            gamma: vec![0.0; n * n * n],
            gdiag: vec![0.0; n],
        }
    }

    pub fn clock(model: &'a MetricModel, origin: f64, sign: f64, t: f64) -> Self {
        let n = model.dim();
        Track {
            model,
            n,
            m: n - 1,
            geo: Vec::new(),
            t,
            origin,
            sign,
            steps_since_reortho: 0,
            reortho_every: 1,
            ws: std::array::from_fn(|_| Vec::new()),
            gamma: Vec::new(),
            gdiag: Vec::new(),
        }
    }

    pub fn is_chart(&self) -> bool {
        !self.geo.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.geo[..self.n]
    }

    pub fn v(&self) -> &[f64] {
        &self.geo[self.n..2 * self.n]
    }

    pub fn frame(&self) -> &[f64] {
        &self.geo[2 * self.n..]
    }

    /// Reverses the direction of travel: flips the velocity (chart) or the clock.
    pub fn reverse(&mut self) {
        if self.is_chart() {
            let n = self.n;
            self.geo[n..2 * n].iter_mut().for_each(|c| *c = -*c);
        } else {
            self.origin += self.sign * self.t;
            self.sign = -self.sign;
        }
        self.t = 0.0;
    }

    /// `R` at the current state.
    #[inline]
    pub fn curvature_into(&self, out: &mut [f64]) {
        if self.is_chart() {
            let n = self.n;
            self.model.chart_endomorphism_into(
                &self.geo[..n],
                &self.geo[n..2 * n],
                &self.geo[2 * n..],
                out,
            );
        } else {
            self.model
                .frame_endomorphism_into(self.origin + self.sign * self.t, out);
        }
    }

    /// Advances the geodesic by `h` with one RK4 step.
    pub fn advance(&mut self, h: f64) -> Result<()> {
        self.t += h;
        if !self.is_chart() {
            return Ok(());
        }
        let n = self.n;
        if self.model.is_flat_torus() {
            // straight lines with a constant parallel frame
            for i in 0..n {
                self.geo[i] += h * self.geo[n + i];
            }
        } else {
            self.rk4_geodesic(h);
            self.renormalize_velocity();
            self.steps_since_reortho += 1;
            if self.steps_since_reortho >= self.reortho_every {
                self.reorthonormalize();
            }
        }
        let (x, tangents) = self.geo.split_at_mut(n);
        self.model.normalize_chart(x, tangents);
        if !self.model.in_domain(&self.geo[..n]) || self.geo.iter().any(|c| !c.is_finite()) {
            return Err(Error::DomainExit {
                model: self.model.to_string(),
                t: self.t,
            });
        }
        Ok(())
    }

    fn geodesic_rhs(
        model: &MetricModel,
        n: usize,
        gamma: &mut [f64],
        state: &[f64],
        out: &mut [f64],
    ) {
        let (x, rest) = state.split_at(n);
        let (v, frame) = rest.split_at(n);
        model.christoffel_into(x, gamma);
        out[..n].copy_from_slice(v);
        let rows = frame.len() / n;
        for k in 0..n {
            let gk = &gamma[k * n * n..(k + 1) * n * n];
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += gk[i * n + j] * v[i] * v[j];
                }
            }
            out[n + k] = -acc;
            for a in 0..rows {
                let e = &frame[a * n..(a + 1) * n];
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += gk[i * n + j] * v[i] * e[j];
                    }
                }
                out[2 * n + a * n + k] = -acc;
            }
        }
    }

    fn rk4_geodesic(&mut self, h: f64) {
        let n = self.n;
        let [k1, k2, k3, k4, tmp] = &mut self.ws;
        let y = &self.geo;
        Self::geodesic_rhs(self.model, n, &mut self.gamma, y, k1);
        for i in 0..y.len() {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        Self::geodesic_rhs(self.model, n, &mut self.gamma, tmp, k2);
        for i in 0..y.len() {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        Self::geodesic_rhs(self.model, n, &mut self.gamma, tmp, k3);
        for i in 0..y.len() {
            tmp[i] = y[i] + h * k3[i];
        }
        Self::geodesic_rhs(self.model, n, &mut self.gamma, tmp, k4);
        for i in 0..self.geo.len() {
            self.geo[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    fn renormalize_velocity(&mut self) {
        let n = self.n;
        self.model.metric_diag_into(&self.geo[..n], &mut self.gdiag);
        let v = &self.geo[n..2 * n];
        let norm = self.model.inner(&self.gdiag, v, v).sqrt();
        if norm > 0.0 {
            self.geo[n..2 * n].iter_mut().for_each(|c| *c /= norm);
        }
    }

    /// Modified Gram-Schmidt of the frame against the velocity.
    pub fn reorthonormalize(&mut self) {
        self.steps_since_reortho = 0;
        let n = self.n;
        self.model.metric_diag_into(&self.geo[..n], &mut self.gdiag);
        let (head, frame) = self.geo.split_at_mut(2 * n);
        let v = &head[n..];
        for a in 0..self.m {
            let (done, rest) = frame.split_at_mut(a * n);
            let e = &mut rest[..n];
            let pv = self.model.inner(&self.gdiag, e, v);
            linalg::axpy(e, -pv, v);
            for b in 0..a {
                let eb = &done[b * n..(b + 1) * n];
                let p = self.model.inner(&self.gdiag, e, eb);
                linalg::axpy(e, -p, eb);
            }
            let norm = self.model.inner(&self.gdiag, e, e).sqrt();
            e.iter_mut().for_each(|c| *c /= norm);
        }
    }
}

/// Backward-moving track with checkpoints every `seg_steps` steps, so that the
/// curvature along the past orbit can be replayed in forward time without
/// re-integrating the (unstable) geodesic forward.
#[derive(Debug, Clone)]
pub(crate) struct Past<'a> {
    checkpoints: Vec<Track<'a>>,
    seg_steps: usize,
    h: f64,
}

impl<'a> Past<'a> {
    /// `backward` must already move into the past.
    pub fn new(backward: Track<'a>, seg_steps: usize, h: f64) -> Self {
        Past {
            checkpoints: vec![backward],
            seg_steps: seg_steps.max(1),
            h,
        }
    }

    pub fn extend_to(&mut self, segments: usize) -> Result<()> {
        while self.checkpoints.len() <= segments {
            let mut tr = self.checkpoints.last().expect("nonempty").clone();
            for _ in 0..self.seg_steps {
                tr.advance(0.5 * self.h)?;
                tr.advance(0.5 * self.h)?;
            }
            self.checkpoints.push(tr);
        }
        Ok(())
    }

    /// Curvature samples of segment `k` (backward distances `[k, k+1]` segments)
    /// at every half step, in forward time order.
    fn segment(&self, k: usize, out: &mut Vec<f64>, m: usize) {
        let mm = m * m;
        let count = 2 * self.seg_steps + 1;
        out.resize(count * mm, 0.0);
        let mut tr = self.checkpoints[k].clone();
        tr.curvature_into(&mut out[(count - 1) * mm..]);
        for i in 1..count {
            tr.advance(0.5 * self.h)
                .expect("replayed segment stays in the chart");
            let slot = count - 1 - i;
            tr.curvature_into(&mut out[slot * mm..(slot + 1) * mm]);
        }
    }
}

#[derive(Debug, Clone)]
struct Replay<'a> {
    past: &'a Past<'a>,
    m: usize,
    segment: usize,
    buf: Vec<f64>,
    pos: usize,
    t: f64,
}

impl<'a> Replay<'a> {
    fn load(&mut self, k: usize) {
        self.segment = k;
        self.past.segment(k, &mut self.buf, self.m);
        self.pos = 0;
    }

    fn sample(&self, i: usize) -> &[f64] {
        let mm = self.m * self.m;
        &self.buf[i * mm..(i + 1) * mm]
    }
}

#[derive(Debug, Clone)]
enum Source<'a> {
    Live(Track<'a>),
    Replay(Replay<'a>),
}

/// Curvature samples at RK4 nodes, either along a live [`Track`] or replayed
/// from a [`Past`].
#[derive(Debug, Clone)]
pub(crate) struct CurvatureStream<'a> {
    source: Source<'a>,
    m: usize,
    pub r0: Vec<f64>,
    pub rh: Vec<f64>,
    pub r1: Vec<f64>,
}

impl<'a> CurvatureStream<'a> {
    pub fn new(track: Track<'a>) -> Self {
        let mm = track.m * track.m;
        let mut r0 = vec![0.0; mm];
        track.curvature_into(&mut r0);
        CurvatureStream {
            m: track.m,
            source: Source::Live(track),
            r0,
            rh: vec![0.0; mm],
            r1: vec![0.0; mm],
        }
    }

    /// Replays `segments` segments of `past`, ending at its origin (time 0).
    pub fn replay(past: &'a Past<'a>, segments: usize, m: usize) -> Self {
        let mm = m * m;
        let mut rp = Replay {
            past,
            m,
            segment: segments,
            buf: Vec::new(),
            pos: 0,
            t: -((segments * past.seg_steps) as f64) * past.h,
        };
        let mut r0 = vec![0.0; mm];
        if segments > 0 {
            rp.load(segments - 1);
            r0.copy_from_slice(rp.sample(0));
        } else {
            past.checkpoints[0].curvature_into(&mut r0);
        }
        CurvatureStream {
            source: Source::Replay(rp),
            m,
            r0,
            rh: vec![0.0; mm],
            r1: vec![0.0; mm],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Orbit time of the current node.
    pub fn t(&self) -> f64 {
        match &self.source {
            Source::Live(tr) => tr.t,
            Source::Replay(rp) => rp.t,
        }
    }

    pub fn live_track(&self) -> Option<&Track<'a>> {
        match &self.source {
            Source::Live(tr) => Some(tr),
            Source::Replay(_) => None,
        }
    }

    /// Moves to `t + h`, filling `rh` and `r1`. Replayed streams only move
    /// by the recording step.
    pub fn advance(&mut self, h: f64) -> Result<()> {
        match &mut self.source {
            Source::Live(track) => {
                track.advance(0.5 * h)?;
                track.curvature_into(&mut self.rh);
                track.advance(0.5 * h)?;
                track.curvature_into(&mut self.r1);
            }
            Source::Replay(rp) => {
                if rp.pos + 2 >= rp.buf.len() / (rp.m * rp.m) {
                    if rp.segment == 0 {
                        return Err(Error::DegenerateInput("replay ran past its origin".into()));
                    }
                    let k = rp.segment - 1;
                    rp.load(k);
                }
                self.rh.copy_from_slice(rp.sample(rp.pos + 1));
                self.r1.copy_from_slice(rp.sample(rp.pos + 2));
                rp.pos += 2;
                rp.t += h;
            }
        }
        Ok(())
    }

    /// Makes the end-of-step sample the start of the next step.
    pub fn commit(&mut self) {
        std::mem::swap(&mut self.r0, &mut self.r1);
    }
}

/// Workspace for classical RK4 on a payload driven by the stream's samples.
#[derive(Debug, Clone)]
pub(crate) struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Rk4 {
            k: std::array::from_fn(|_| vec![0.0; len]),
            tmp: vec![0.0; len],
        }
    }

    /// One step of size `h`; `f(r, state, out)` is the payload right-hand side.
    #[inline]
    pub fn step<F>(&mut self, y: &mut [f64], h: f64, stream: &CurvatureStream, f: F)
    where
        F: FnMut(&[f64], &[f64], &mut [f64]),
    {
        self.step_with(y, h, [&stream.r0, &stream.rh, &stream.r1], f);
    }

    /// Same as [`Rk4::step`] with explicit samples at `t`, `t + h/2`, `t + h`.
    #[inline]
    pub fn step_with<F>(&mut self, y: &mut [f64], h: f64, r: [&[f64]; 3], mut f: F)
    where
        F: FnMut(&[f64], &[f64], &mut [f64]),
    {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        let len = y.len();
        f(r[0], y, k1);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(r[1], tmp, k2);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(r[1], tmp, k3);
        for i in 0..len {
            tmp[i] = y[i] + h * k3[i];
        }
        f(r[2], tmp, k4);
        for i in 0..len {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// `d/dt [U, int tr U, int Ric] = [-U^2 - R, tr U, tr R / m]`.
#[inline]
pub(crate) fn riccati_rhs(m: usize, r: &[f64], state: &[f64], out: &mut [f64]) {
    let mm = m * m;
    let u = &state[..mm];
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for l in 0..m {
                acc += u[i * m + l] * u[l * m + j];
            }
            out[i * m + j] = -acc - r[i * m + j];
        }
    }
    out[mm] = linalg::trace(u, m);
    out[mm + 1] = linalg::trace(r, m) / m as f64;
}

/// `d/dt [Y, Y', int Ric] = [Y', -R Y, tr R / m]` for `Y: m x cols`.
#[inline]
pub(crate) fn jacobi_rhs(m: usize, cols: usize, r: &[f64], state: &[f64], out: &mut [f64]) {
    let block = m * cols;
    let (y, rest) = state.split_at(block);
    out[..block].copy_from_slice(&rest[..block]);
    linalg::matmul(r, y, m, m, cols, &mut out[block..2 * block]);
    out[block..2 * block].iter_mut().for_each(|c| *c = -*c);
    out[2 * block] = linalg::trace(r, m) / m as f64;
}

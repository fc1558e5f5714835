//! Flocking diagnostics recorded along particle runs, CSV export, and the
//! binary trajectory log.

use serde::Serialize;

use super::{chain_connected, SimError, SwarmState};
use crate::measures::{ball_thickness, EvalSet};
use crate::models::Model;

/// What to record and how often.
#[derive(Debug, Clone)]
pub struct RecordSpec {
    /// Record every `every`-th step (0 records only endpoints).
    pub every: usize,
    /// Chain-connectivity scale, if wanted.
    pub chain_scale: Option<f64>,
    /// Ball-thickness radius, if wanted.
    pub thickness_radius: Option<f64>,
    /// Keep full frames for the binary trajectory log.
    pub keep_frames: bool,
    /// Use Euler-Maruyama even at `sigma = 0` (step-scheme comparisons).
    pub force_euler: bool,
}

impl Default for RecordSpec {
    fn default() -> Self {
        RecordSpec {
            every: 10,
            chain_scale: None,
            thickness_radius: None,
            keep_frames: false,
            force_euler: false,
        }
    }
}

/// Chain-connectivity scale marker for diagnostics consumers.
pub type ChainScale = Option<f64>;

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub time: Vec<f64>,
    /// Position diameter `D(t)`.
    pub diameter: Vec<f64>,
    /// Velocity diameter `A(t)`.
    pub velocity_diameter: Vec<f64>,
    pub mean_velocity: Vec<[f64; 2]>,
    pub kinetic_energy: Vec<f64>,
    /// Energy-dissipation functional `(u,u)_kappa - (u,<u>)_kappa`.
    pub dissipation: Vec<f64>,
    pub chain_connected: Vec<bool>,
    pub thickness: Vec<f64>,
    #[serde(skip)]
    spec: RecordSpec,
    #[serde(skip)]
    steps_since: usize,
    #[serde(skip)]
    pub frames: Vec<Frame>,
    #[serde(skip)]
    pub final_state: Option<SwarmState>,
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl Diagnostics {
    pub(super) fn new(spec: RecordSpec) -> Self {
        Diagnostics {
            time: Vec::new(),
            diameter: Vec::new(),
            velocity_diameter: Vec::new(),
            mean_velocity: Vec::new(),
            kinetic_energy: Vec::new(),
            dissipation: Vec::new(),
            chain_connected: Vec::new(),
            thickness: Vec::new(),
            spec,
            steps_since: 0,
            frames: Vec::new(),
            final_state: None,
        }
    }

    pub(super) fn due(&mut self, _state: &SwarmState) -> bool {
        if self.spec.every == 0 {
            return false;
        }
        self.steps_since += 1;
        if self.steps_since >= self.spec.every {
            self.steps_since = 0;
            true
        } else {
            false
        }
    }

    pub(super) fn record(&mut self, model: &Model, state: &SwarmState) -> Result<(), SimError> {
        let n = state.len();
        let dim = state.domain.dim();
        let mut diam = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                // ties broken by scan order: lowest index pair wins
                let d = state.domain.distance(state.positions[i], state.positions[j]);
                if d > diam {
                    diam = d;
                }
            }
        }
        let mut vdiam = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let dv0 = state.velocities[i][0] - state.velocities[j][0];
                let dv1 = state.velocities[i][1] - state.velocities[j][1];
                let d = dv0.hypot(dv1);
                if d > vdiam {
                    vdiam = d;
                }
            }
        }
        // dissipation (u,u)_kappa - (u,<u>)_kappa summed over components
        let rho = state.measure();
        let s = model.strength(&rho)?;
        let mut diss = 0.0;
        for c in 0..dim {
            let uc: Vec<f64> = state.velocities.iter().map(|v| v[c]).collect();
            let auc = model.average(&rho, &uc)?;
            for i in 0..n {
                diss += state.masses[i] * s[i] * uc[i] * (uc[i] - auc[i]);
            }
        }
        self.time.push(state.time);
        self.diameter.push(diam);
        self.velocity_diameter.push(vdiam);
        self.mean_velocity.push(state.mean_velocity());
        self.kinetic_energy.push(state.kinetic_energy());
        self.dissipation.push(diss);
        if let Some(r) = self.spec.chain_scale {
            self.chain_connected
                .push(chain_connected(&state.domain, &state.positions, r));
        }
        if let Some(r) = self.spec.thickness_radius {
            let th = ball_thickness(&rho, r, &EvalSet::Points(state.positions.clone()))
                .unwrap_or(0.0);
            self.thickness.push(th);
        }
        if self.spec.keep_frames {
            self.frames.push(Frame {
                t: state.time,
                x: state
                    .positions
                    .iter()
                    .flat_map(|p| p[..dim].to_vec())
                    .collect(),
                v: state
                    .velocities
                    .iter()
                    .flat_map(|v| v[..dim].to_vec())
                    .collect(),
            });
        }
        Ok(())
    }

    pub(super) fn finish(&mut self, state: SwarmState) {
        self.final_state = Some(state);
    }

    /// CSV rows `t,D,A,ubar_x,ubar_y,energy,dissipation,thickness,chain`.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("t,diameter,velocity_diameter,ubar_x,ubar_y,energy,dissipation,thickness,chain_connected\n");
        for k in 0..self.time.len() {
            let th = self.thickness.get(k).map_or(String::new(), |v| v.to_string());
            let ch = self
                .chain_connected
                .get(k)
                .map_or(String::new(), |v| (*v as u8).to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                self.time[k],
                self.diameter[k],
                self.velocity_diameter[k],
                self.mean_velocity[k][0],
                self.mean_velocity[k][1],
                self.kinetic_energy[k],
                self.dissipation[k],
                th,
                ch
            ));
        }
        out
    }

    /// Least-squares slope and R^2 of `ln(series)` over `[t_lo, t_hi]`.
    pub fn log_fit(&self, series: &[f64], t_lo: f64, t_hi: f64) -> Option<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .time
            .iter()
            .zip(series)
            .filter(|(t, v)| **t >= t_lo && **t <= t_hi && **v > 1e-300)
            .map(|(t, v)| (*t, v.ln()))
            .collect();
        linear_fit(&pts)
    }
}

/// Least-squares slope and R^2 for a point set.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in pts {
        let f = slope * x + intercept;
        ss_res += (y - f) * (y - f);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some((slope, r2))
}

/// Binary trajectory log.
///
/// Layout (little-endian): header `u64 N, u64 n (dimension), f64 dt`; then
/// per frame `f64 t`, `N*n` position doubles, `N*n` velocity doubles.
pub struct TrajectoryLog;

impl TrajectoryLog {
    pub fn to_bytes(n: usize, dim: usize, dt: f64, frames: &[Frame]) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + frames.len() * (1 + 2 * n * dim) * 8);
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&(dim as u64).to_le_bytes());
        out.extend_from_slice(&dt.to_le_bytes());
        for f in frames {
            out.extend_from_slice(&f.t.to_le_bytes());
            for x in &f.x {
                out.extend_from_slice(&x.to_le_bytes());
            }
            for v in &f.v {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<(usize, usize, f64, Vec<Frame>)> {
        if bytes.len() < 24 {
            return None;
        }
        let n = u64::from_le_bytes(bytes[0..8].try_into().ok()?) as usize;
        let dim = u64::from_le_bytes(bytes[8..16].try_into().ok()?) as usize;
        let dt = f64::from_le_bytes(bytes[16..24].try_into().ok()?);
        let frame_len = (1 + 2 * n * dim) * 8;
        let body = &bytes[24..];
        if body.len() % frame_len != 0 {
            return None;
        }
        let mut frames = Vec::new();
        for chunk in body.chunks_exact(frame_len) {
            let t = f64::from_le_bytes(chunk[0..8].try_into().ok()?);
            let mut x = Vec::with_capacity(n * dim);
            let mut v = Vec::with_capacity(n * dim);
            for i in 0..(n * dim) {
                let off = 8 + i * 8;
                x.push(f64::from_le_bytes(chunk[off..off + 8].try_into().ok()?));
            }
            for i in 0..(n * dim) {
                let off = 8 + (n * dim + i) * 8;
                v.push(f64::from_le_bytes(chunk[off..off + 8].try_into().ok()?));
            }
            frames.push(Frame { t, x, v });
        }
        Some((n, dim, dt, frames))
    }
}

//! Deterministic and stochastic particle simulators for alignment dynamics
//! `x' = v`, `v' = s (<v> - v)`, with flocking diagnostics.

pub mod diagnostics;
pub mod meanfield;
pub mod samplers;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::measures::{Domain, Measure, Point};
use crate::models::{Model, ModelError, ModelKind};

pub use diagnostics::{ChainScale, Diagnostics, RecordSpec, TrajectoryLog};
pub use samplers::InitialSampler;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("integrator diverged at t = {0}")]
    Diverged(f64),
    #[error("maximum principle violated at t = {t} (overshoot {overshoot:.3e})")]
    MaxPrinciple { t: f64, overshoot: f64 },
    #[error("time step must be positive")]
    BadTimeStep,
    #[error("noise strength must be non-negative")]
    BadSigma,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Particle phase-space state. Velocity dimension equals the domain's.
#[derive(Debug, Clone)]
pub struct SwarmState {
    pub domain: Domain,
    pub positions: Vec<Point>,
    pub velocities: Vec<[f64; 2]>,
    pub masses: Vec<f64>,
    pub time: f64,
}

impl SwarmState {
    pub fn new(
        domain: Domain,
        positions: Vec<Point>,
        velocities: Vec<[f64; 2]>,
        masses: Vec<f64>,
    ) -> Self {
        assert_eq!(positions.len(), velocities.len());
        assert_eq!(positions.len(), masses.len());
        let total: f64 = masses.iter().sum();
        assert!((total - 1.0).abs() < 1e-9, "masses must sum to 1");
        let positions = positions.into_iter().map(|p| domain.wrap(p)).collect();
        SwarmState {
            domain,
            positions,
            velocities,
            masses,
            time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn measure(&self) -> Measure {
        Measure::atomic(self.domain, self.positions.clone(), self.masses.clone())
            .expect("swarm masses sum to 1")
    }

    pub fn mean_velocity(&self) -> [f64; 2] {
        let mut m = [0.0; 2];
        for (w, v) in self.masses.iter().zip(&self.velocities) {
            m[0] += w * v[0];
            m[1] += w * v[1];
        }
        m
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self
            .masses
            .iter()
            .zip(&self.velocities)
            .map(|(m, v)| m * (v[0] * v[0] + v[1] * v[1]))
            .sum::<f64>()
    }

    pub fn max_speed_component(&self) -> f64 {
        self.velocities
            .iter()
            .map(|v| v[0].abs().max(v[1].abs()))
            .fold(0.0, f64::max)
    }
}

/// Alignment acceleration `a_i = s_i (<v>_i - v_i)` at given positions.
///
/// Dedicated O(N^2) paths share one kernel evaluation per pair across the
/// velocity components; the over-mollified model goes through its quadrature
/// factorization instead of the N^2-by-quadrature kernel matrix.
fn alignment_accel(
    model: &Model,
    domain: &Domain,
    positions: &[Point],
    velocities: &[[f64; 2]],
    masses: &[f64],
    dim: usize,
) -> Result<Vec<[f64; 2]>, SimError> {
    let n = positions.len();
    let mut acc = vec![[0.0; 2]; n];
    match &model.kind {
        ModelKind::Global => {
            let mut mean = [0.0; 2];
            for (m, v) in masses.iter().zip(velocities) {
                for c in 0..dim {
                    mean[c] += m * v[c];
                }
            }
            for i in 0..n {
                for c in 0..dim {
                    acc[i][c] = mean[c] - velocities[i][c];
                }
            }
        }
        ModelKind::Identity => {}
        ModelKind::CuckerSmale { phi }
        | ModelKind::MotschTadmor { phi }
        | ModelKind::Beta { phi, .. } => {
            let beta_exp = match &model.kind {
                ModelKind::CuckerSmale { .. } => 1.0,
                ModelKind::MotschTadmor { .. } => 0.0,
                ModelKind::Beta { beta, .. } => *beta,
                _ => unreachable!(),
            };
            for i in 0..n {
                let mut den = 0.0;
                let mut num = [0.0; 2];
                for j in 0..n {
                    let w = masses[j] * phi.eval(domain.distance(positions[i], positions[j]));
                    den += w;
                    for c in 0..dim {
                        num[c] += w * velocities[j][c];
                    }
                }
                if den < crate::models::VACUUM_EPS {
                    return Err(SimError::Model(ModelError::VacuumEvaluation));
                }
                // s = den^beta, <v> = num/den, a = s(<v> - v)
                let s = if beta_exp == 1.0 { den } else { den.powf(beta_exp) };
                for c in 0..dim {
                    acc[i][c] = s * (num[c] / den - velocities[i][c]);
                }
            }
        }
        ModelKind::Segregation { partition } => {
            let l = partition.len();
            let mut mass_g = vec![0.0; l];
            let mut mom_g = vec![[0.0; 2]; l];
            let g: Vec<Vec<f64>> = positions.iter().map(|&p| partition.eval_all(p)).collect();
            for i in 0..n {
                for k in 0..l {
                    let w = masses[i] * g[i][k];
                    mass_g[k] += w;
                    for c in 0..dim {
                        mom_g[k][c] += w * velocities[i][c];
                    }
                }
            }
            for i in 0..n {
                let mut ave = [0.0; 2];
                for k in 0..l {
                    if mass_g[k] < crate::models::VACUUM_EPS {
                        if g[i][k] > crate::models::VACUUM_EPS {
                            return Err(SimError::Model(ModelError::VacuumEvaluation));
                        }
                        continue;
                    }
                    for c in 0..dim {
                        ave[c] += g[i][k] * mom_g[k][c] / mass_g[k];
                    }
                }
                for c in 0..dim {
                    acc[i][c] = ave[c] - velocities[i][c];
                }
            }
        }
        ModelKind::Overmollified { phi, quadrature } => {
            let length = domain.torus_length().ok_or(SimError::Model(
                ModelError::Unsupported("over-mollified averaging needs a torus"),
            ))?;
            let q = *quadrature;
            let dz = length / q as f64;
            let mut favre = vec![[0.0; 2]; q];
            let mut weights = vec![vec![0.0; q]; n];
            for i in 0..n {
                for (k, w) in weights[i].iter_mut().enumerate() {
                    let z = [(k as f64 + 0.5) * dz, 0.0];
                    *w = phi.eval(domain.distance(positions[i], z));
                }
            }
            for k in 0..q {
                let mut den = 0.0;
                let mut num = [0.0; 2];
                for i in 0..n {
                    let w = masses[i] * weights[i][k];
                    den += w;
                    for c in 0..dim {
                        num[c] += w * velocities[i][c];
                    }
                }
                if den < crate::models::VACUUM_EPS {
                    return Err(SimError::Model(ModelError::VacuumEvaluation));
                }
                for c in 0..dim {
                    favre[k][c] = num[c] / den;
                }
            }
            for i in 0..n {
                let mut ave = [0.0; 2];
                for k in 0..q {
                    for c in 0..dim {
                        ave[c] += weights[i][k] * favre[k][c] * dz;
                    }
                }
                for c in 0..dim {
                    acc[i][c] = ave[c] - velocities[i][c];
                }
            }
        }
        ModelKind::RoughPartition { .. } | ModelKind::Topological { .. } => {
            // no fast path; go through the kernel matrix representation
            let rho = Measure::atomic(*domain, positions.to_vec(), masses.to_vec())
                .map_err(ModelError::Measure)?;
            let km = model.kernel_matrix(&rho)?;
            for c in 0..dim {
                let vc: Vec<f64> = velocities.iter().map(|v| v[c]).collect();
                let sv = km.apply(&vc);
                for i in 0..n {
                    acc[i][c] = sv[i] - km.strength[i] * velocities[i][c];
                }
            }
        }
    }
    Ok(acc)
}

fn check_finite(state: &SwarmState) -> Result<(), SimError> {
    for (p, v) in state.positions.iter().zip(&state.velocities) {
        if !p[0].is_finite() || !p[1].is_finite() || !v[0].is_finite() || !v[1].is_finite() {
            return Err(SimError::Diverged(state.time));
        }
    }
    Ok(())
}

/// One RK4 step of the deterministic system; positions wrapped on the torus.
pub fn step_deterministic(
    model: &Model,
    state: &SwarmState,
    dt: f64,
) -> Result<SwarmState, SimError> {
    if dt <= 0.0 {
        return Err(SimError::BadTimeStep);
    }
    let n = state.len();
    let dim = state.domain.dim();
    let masses = &state.masses;
    let domain = &state.domain;

    let eval = |x: &[Point], v: &[[f64; 2]]| -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>), SimError> {
        let a = alignment_accel(model, domain, x, v, masses, dim)?;
        Ok((v.to_vec(), a))
    };

    let advance = |x: &[Point], v: &[[f64; 2]], kx: &[[f64; 2]], kv: &[[f64; 2]], h: f64| {
        let mut nx = x.to_vec();
        let mut nv = v.to_vec();
        for i in 0..n {
            for c in 0..dim {
                nx[i][c] += h * kx[i][c];
                nv[i][c] += h * kv[i][c];
            }
        }
        (nx, nv)
    };

    let (k1x, k1v) = eval(&state.positions, &state.velocities)?;
    let (x2, v2) = advance(&state.positions, &state.velocities, &k1x, &k1v, 0.5 * dt);
    let (k2x, k2v) = eval(&x2, &v2)?;
    let (x3, v3) = advance(&state.positions, &state.velocities, &k2x, &k2v, 0.5 * dt);
    let (k3x, k3v) = eval(&x3, &v3)?;
    let (x4, v4) = advance(&state.positions, &state.velocities, &k3x, &k3v, dt);
    let (k4x, k4v) = eval(&x4, &v4)?;

    let mut positions = state.positions.clone();
    let mut velocities = state.velocities.clone();
    for i in 0..n {
        for c in 0..dim {
            positions[i][c] += dt / 6.0
                * (k1x[i][c] + 2.0 * k2x[i][c] + 2.0 * k3x[i][c] + k4x[i][c]);
            velocities[i][c] += dt / 6.0
                * (k1v[i][c] + 2.0 * k2v[i][c] + 2.0 * k3v[i][c] + k4v[i][c]);
        }
    }
    let positions = positions.into_iter().map(|p| domain.wrap(p)).collect();
    let next = SwarmState {
        domain: state.domain,
        positions,
        velocities,
        masses: state.masses.clone(),
        time: state.time + dt,
    };
    check_finite(&next)?;
    Ok(next)
}

/// One Euler-Maruyama step: drift `s (<v> - v)`, diffusion `sqrt(2 sigma s)`.
/// With `sigma = 0` this is the explicit Euler step of the deterministic
/// system (the noise term vanishes identically).
pub fn step_stochastic(
    model: &Model,
    state: &SwarmState,
    dt: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SwarmState, SimError> {
    if dt <= 0.0 {
        return Err(SimError::BadTimeStep);
    }
    if sigma < 0.0 {
        return Err(SimError::BadSigma);
    }
    let n = state.len();
    let dim = state.domain.dim();
    let acc = alignment_accel(
        model,
        &state.domain,
        &state.positions,
        &state.velocities,
        &state.masses,
        dim,
    )?;
    let strengths = model.strength(&state.measure())?;
    let mut positions = state.positions.clone();
    let mut velocities = state.velocities.clone();
    for i in 0..n {
        for c in 0..dim {
            positions[i][c] += dt * state.velocities[i][c];
            let noise: f64 = rng.sample(StandardNormal);
            velocities[i][c] +=
                dt * acc[i][c] + (2.0 * sigma * strengths[i] * dt).sqrt() * noise;
        }
    }
    let positions = positions.into_iter().map(|p| state.domain.wrap(p)).collect();
    let next = SwarmState {
        domain: state.domain,
        positions,
        velocities,
        masses: state.masses.clone(),
        time: state.time + dt,
    };
    check_finite(&next)?;
    Ok(next)
}

/// Union-find connectivity of the `r`-proximity graph.
pub fn chain_connected(domain: &Domain, points: &[Point], r: f64) -> bool {
    let n = points.len();
    if n <= 1 {
        return true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if domain.distance(points[i], points[j]) < r {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let root = find(&mut parent, 0);
    (1..n).all(|i| find(&mut parent, i) == root)
}

/// Hop count of the shortest chain between the two farthest support points
/// in the `r`-proximity graph (`None` if disconnected at that scale).
pub fn chain_length(domain: &Domain, points: &[Point], r: f64) -> Option<usize> {
    let n = points.len();
    if n == 0 {
        return None;
    }
    // farthest pair by brute force, lowest index pair on ties
    let mut best = (0usize, 0usize, -1.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = domain.distance(points[i], points[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    // BFS
    let (src, dst, _) = best;
    let mut dist = vec![usize::MAX; n];
    dist[src] = 0;
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        for w in 0..n {
            if dist[w] == usize::MAX && domain.distance(points[v], points[w]) < r {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    if dist[dst] == usize::MAX {
        None
    } else {
        Some(dist[dst] + 1)
    }
}

/// Integrate to `t_final`, recording diagnostics on the given cadence.
///
/// The maximum-principle sentinel halves `dt` once and restarts if the top
/// speed overshoots the initial bound by more than `10 dt^4 t_final`; a
/// second trip is an error.
pub fn run(
    model: &Model,
    initial: &SwarmState,
    t_final: f64,
    dt: f64,
    sigma: f64,
    seed: u64,
    record: &RecordSpec,
) -> Result<Diagnostics, SimError> {
    match run_once(model, initial, t_final, dt, sigma, seed, record) {
        Err(SimError::MaxPrinciple { .. }) => {
            run_once(model, initial, t_final, dt / 2.0, sigma, seed, record)
        }
        other => other,
    }
}

fn run_once(
    model: &Model,
    initial: &SwarmState,
    t_final: f64,
    dt: f64,
    sigma: f64,
    seed: u64,
    record: &RecordSpec,
) -> Result<Diagnostics, SimError> {
    use rand::SeedableRng;
    if dt <= 0.0 || t_final <= 0.0 {
        return Err(SimError::BadTimeStep);
    }
    let steps = (t_final / dt).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diag = Diagnostics::new(record.clone());
    let mut state = initial.clone();
    let speed_bound = state.max_speed_component();
    // the sentinel only applies to the deterministic integrator
    let mp_slack = 10.0 * dt.powi(4) * t_final + 1e-12;
    diag.record(model, &state)?;
    for _ in 0..steps {
        state = if sigma == 0.0 && !record.force_euler {
            step_deterministic(model, &state, dt)?
        } else {
            step_stochastic(model, &state, dt, sigma, &mut rng)?
        };
        if sigma == 0.0 {
            let overshoot = state.max_speed_component() - speed_bound;
            if overshoot > mp_slack {
                return Err(SimError::MaxPrinciple {
                    t: state.time,
                    overshoot,
                });
            }
        }
        if diag.due(&state) {
            diag.record(model, &state)?;
        }
    }
    diag.finish(state);
    Ok(diag)
}

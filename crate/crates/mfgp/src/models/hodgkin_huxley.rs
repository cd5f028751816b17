//! Hodgkin-Huxley action-potential model.
//!
//! Membrane equation `C_m dV/dt = I_ext - I_Na - I_K - I_L` with
//! `I_Na = g_Na m^3 h (V - E_Na)`, `I_K = g_K n^4 (V - E_K)`,
//! `I_L = g_L (V - E_L)`, and first-order gate kinetics
//! `dg/dt = alpha_g(V)(1 - g) - beta_g(V) g` for `g in {n, m, h}`.
//! Integrated with fixed-step RK4.
//!
//! The two fidelity levels are the same neuron driven at different external
//! currents (1.0 vs 1.05), which shifts the oscillation period and builds
//! up a growing phase offset from identical initial conditions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fusion::FidelityPair;
use crate::models::BenchmarkPair;

/// Model constants: normalized conductances (mS/cm^2), equilibrium
/// potentials (mV), membrane capacitance (uF/cm^2), external current
/// (uA/cm^2). Time is in milliseconds throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HHParameters {
    pub g_na: f64,
    pub g_k: f64,
    pub g_l: f64,
    pub e_na: f64,
    pub e_k: f64,
    pub e_l: f64,
    pub c_m: f64,
    pub i_ext: f64,
}

impl HHParameters {
    /// Squid-axon constants with the external current as the fidelity knob.
    pub fn with_current(i_ext: f64) -> Self {
        Self {
            g_na: 1.2,
            g_k: 0.36,
            g_l: 0.003,
            e_na: 55.17,
            e_k: -72.14,
            e_l: -49.42,
            c_m: 0.01,
            i_ext,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_na > 0.0 && self.g_k > 0.0 && self.g_l > 0.0 && self.c_m > 0.0) {
            return Err(Error::InvalidArgument(
                "HH conductances and capacitance must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for HHParameters {
    fn default() -> Self {
        Self::with_current(1.0)
    }
}

/// Membrane potential (mV) and the three gate variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HHState {
    pub v: f64,
    pub n: f64,
    pub m: f64,
    pub h: f64,
}

impl HHState {
    /// Resting state: gates at their steady-state values for `v`.
    pub fn resting(v: f64) -> Self {
        let (n_inf, m_inf, h_inf) = steady_state_gates(v);
        Self {
            v,
            n: n_inf,
            m: m_inf,
            h: h_inf,
        }
    }

    fn is_finite(&self) -> bool {
        self.v.is_finite() && self.n.is_finite() && self.m.is_finite() && self.h.is_finite()
    }
}

/// `a x / (1 - exp(-x / b))`, with the removable singularity at `x = 0`
/// evaluated as its limit `a b`.
fn linear_over_expm1(a: f64, x: f64, b: f64) -> f64 {
    if x == 0.0 {
        a * b
    } else {
        a * x / (-(-x / b).exp_m1())
    }
}

/// Voltage-dependent opening/closing rates `(alpha_n, beta_n, alpha_m,
/// beta_m, alpha_h, beta_h)` in 1/ms.
pub fn hh_rates(v: f64) -> (f64, f64, f64, f64, f64, f64) {
    let alpha_n = linear_over_expm1(0.01, v + 50.0, 10.0);
    let beta_n = 0.125 * (-(v + 60.0) / 80.0).exp();
    let alpha_m = linear_over_expm1(0.1, v + 35.0, 10.0);
    let beta_m = 4.0 * (-0.0556 * (v + 60.0)).exp();
    let alpha_h = 0.07 * (-0.05 * (v + 60.0)).exp();
    let beta_h = 1.0 / (1.0 + (-0.1 * (v + 30.0)).exp());
    (alpha_n, beta_n, alpha_m, beta_m, alpha_h, beta_h)
}

/// Gate steady states `(n_inf, m_inf, h_inf)` at a held potential.
pub fn steady_state_gates(v: f64) -> (f64, f64, f64) {
    let (an, bn, am, bm, ah, bh) = hh_rates(v);
    (an / (an + bn), am / (am + bm), ah / (ah + bh))
}

fn derivatives(params: &HHParameters, s: &HHState) -> [f64; 4] {
    let (an, bn, am, bm, ah, bh) = hh_rates(s.v);
    let i_na = params.g_na * s.m.powi(3) * s.h * (s.v - params.e_na);
    let i_k = params.g_k * s.n.powi(4) * (s.v - params.e_k);
    let i_l = params.g_l * (s.v - params.e_l);
    [
        (params.i_ext - i_na - i_k - i_l) / params.c_m,
        an * (1.0 - s.n) - bn * s.n,
        am * (1.0 - s.m) - bm * s.m,
        ah * (1.0 - s.h) - bh * s.h,
    ]
}

fn rk4_step(params: &HHParameters, s: &HHState, dt: f64) -> HHState {
    let advance = |base: &HHState, k: &[f64; 4], w: f64| HHState {
        v: base.v + w * k[0],
        n: base.n + w * k[1],
        m: base.m + w * k[2],
        h: base.h + w * k[3],
    };
    let k1 = derivatives(params, s);
    let k2 = derivatives(params, &advance(s, &k1, 0.5 * dt));
    let k3 = derivatives(params, &advance(s, &k2, 0.5 * dt));
    let k4 = derivatives(params, &advance(s, &k3, dt));
    HHState {
        v: s.v + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        n: s.n + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        m: s.m + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        h: s.h + dt / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
    }
}

/// A simulated trajectory on a uniform time grid.
#[derive(Debug, Clone)]
pub struct HHTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<HHState>,
    /// Largest distance any gate strayed outside [0, 1] before clamping.
    pub max_gate_overshoot: f64,
}

impl HHTrajectory {
    pub fn voltages(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.v).collect()
    }

    /// Linear interpolation of the membrane potential at time `t` (ms).
    pub fn voltage_at(&self, t: f64) -> f64 {
        interp(&self.times, &self.states, t, |s| s.v)
    }

    /// Number of upward crossings of the given voltage threshold.
    pub fn spike_count(&self, threshold: f64) -> usize {
        self.states
            .windows(2)
            .filter(|w| w[0].v < threshold && w[1].v >= threshold)
            .count()
    }
}

fn interp(times: &[f64], states: &[HHState], t: f64, f: impl Fn(&HHState) -> f64) -> f64 {
    let t0 = times[0];
    let dt = times[1] - times[0];
    let pos = (t - t0) / dt;
    if pos <= 0.0 {
        return f(&states[0]);
    }
    let last = states.len() - 1;
    if pos >= last as f64 {
        return f(&states[last]);
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    f(&states[i]) * (1.0 - frac) + f(&states[i + 1]) * frac
}

/// Integrate the model with fixed-step RK4.
///
/// Gate variables are clamped into [0, 1] after each step; the worst
/// pre-clamp overshoot is reported on the trajectory. A non-finite state
/// aborts with [`Error::IntegrationBlowup`].
pub fn hh_simulate(
    params: &HHParameters,
    initial: HHState,
    t_end: f64,
    dt: f64,
) -> Result<HHTrajectory> {
    params.validate()?;
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::InvalidArgument(
            "hh_simulate: dt and t_end must be positive".into(),
        ));
    }
    for g in [initial.n, initial.m, initial.h] {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::InvalidArgument(
                "hh_simulate: initial gates must lie in [0, 1]".into(),
            ));
        }
    }

    let n_steps = (t_end / dt).round().max(1.0) as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut state = initial;
    let mut max_overshoot = 0.0f64;
    times.push(0.0);
    states.push(state);

    for step in 1..=n_steps {
        let mut next = rk4_step(params, &state, dt);
        if !next.is_finite() {
            return Err(Error::IntegrationBlowup {
                step,
                t: step as f64 * dt,
            });
        }
        for g in [next.n, next.m, next.h] {
            max_overshoot = max_overshoot.max(-g).max(g - 1.0);
        }
        next.n = next.n.clamp(0.0, 1.0);
        next.m = next.m.clamp(0.0, 1.0);
        next.h = next.h.clamp(0.0, 1.0);
        state = next;
        times.push(step as f64 * dt);
        states.push(state);
    }

    Ok(HHTrajectory {
        times,
        states,
        max_gate_overshoot: max_overshoot.max(0.0),
    })
}

/// Default simulation horizon (ms) and step.
pub const DEFAULT_T_END: f64 = 100.0;
pub const DEFAULT_DT: f64 = 0.01;
/// Initial potential; gates start at their steady states for it.
pub const DEFAULT_V0: f64 = -60.0;
/// External currents of the two fidelity levels.
pub const I_EXT_HIGH: f64 = 1.0;
pub const I_EXT_LOW: f64 = 1.05;
/// Regression window (ms), mapped to normalized time [0, 1] for the fusion
/// stage. Starts after the initial transient so both traces sit on their
/// limit cycles, and spans ~4.5 oscillation periods, over which the phase
/// offset between the two currents grows to tens of millivolts.
pub const WINDOW_START: f64 = 60.0;
pub const WINDOW_END: f64 = 90.0;
/// Oscillation period of the sustained limit cycle at these parameters
/// (both currents sit within 0.1 ms of it).
pub const OSCILLATION_PERIOD_MS: f64 = 6.7;
/// Threshold for counting oscillation peaks as spikes. The sustained limit
/// cycle at these drive currents peaks near -15 mV (the first transient
/// spike alone reaches +50 mV), so upward crossings of -20 mV count every
/// cycle.
pub const SPIKE_THRESHOLD: f64 = -20.0;

/// Map normalized regression time to simulation time (ms).
pub fn window_time(t_norm: f64) -> f64 {
    WINDOW_START + (WINDOW_END - WINDOW_START) * t_norm
}

/// Simulate both fidelity traces over the default window.
pub fn hh_traces(t_end: f64, dt: f64) -> Result<(HHTrajectory, HHTrajectory)> {
    let initial = HHState::resting(DEFAULT_V0);
    let high = hh_simulate(&HHParameters::with_current(I_EXT_HIGH), initial, t_end, dt)?;
    let low = hh_simulate(&HHParameters::with_current(I_EXT_LOW), initial, t_end, dt)?;
    Ok((high, low))
}

/// Sample the two traces into a [`FidelityPair`].
///
/// Sample times are normalized to [0, 1] over the regression window; `y_h`
/// comes from the 1.0-current trace and `y_l` from the 1.05-current trace,
/// both started from identical initial conditions.
pub fn hh_fidelity_pair(t_h: &[f64], t_l: &[f64]) -> Result<FidelityPair> {
    let (high, low) = hh_traces(DEFAULT_T_END, DEFAULT_DT)?;
    let y_h: Vec<f64> = t_h
        .iter()
        .map(|&t| high.voltage_at(window_time(t)))
        .collect();
    let y_l: Vec<f64> = t_l
        .iter()
        .map(|&t| low.voltage_at(window_time(t)))
        .collect();
    FidelityPair::new(t_h.to_vec(), y_h, t_l.to_vec(), y_l, (0.0, 1.0))
}

/// The HH scenario as a benchmark pair over normalized window time.
pub fn hh_benchmark() -> Result<BenchmarkPair> {
    let (high, low) = hh_traces(DEFAULT_T_END, DEFAULT_DT)?;
    let high = Arc::new(high);
    let low = Arc::new(low);
    Ok(BenchmarkPair {
        name: "hh",
        f_h: Arc::new(move |t: f64| high.voltage_at(window_time(t))),
        f_l: Arc::new(move |t: f64| low.voltage_at(window_time(t))),
        domain: (0.0, 1.0),
        default_sizes: (20, 300),
    })
}

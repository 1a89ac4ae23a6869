//! Weak values and exact finite-strength von Neumann pointer coupling.
//!
//! A pointer coupled to `Π_arm` through `exp(−i g Π_arm ⊗ p̂)` translates by
//! `g` on the arm component and stays put on the complement. The joint state
//! is therefore kept as a sum of branches, each a system component paired
//! with a tuple of pointer offsets in `{0, g_k}`. Nothing is truncated in
//! `g`; post-selected pointer moments follow from Gaussian overlaps in
//! closed form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::Scenario;
use crate::exec::Execution;
use crate::optics::arm_projector;
use crate::qstate::{inner, Amplitude, Operator, StateVector, TOL};

/// Relative threshold on `|⟨f|i⟩|` below which the weak value is undefined.
pub const DENOM_EPS: f64 = 1e-10;

/// Default pointer position spread.
pub const DEFAULT_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct WeakValue {
    /// Arm whose projector was evaluated, when the observable is one.
    pub arm: Option<String>,
    pub boundary: usize,
    pub value: Amplitude,
    pub numerator: Amplitude,
    pub denominator: Amplitude,
}

/// `⟨ψ_f|U_{>b} O U_{≤b}|ψ_i⟩ / ⟨ψ_f|U|ψ_i⟩`
pub fn weak_value(scenario: &Scenario, observable: &Operator, boundary: usize) -> Result<WeakValue> {
    let denominator = checked_denominator(scenario)?;
    let numerator = scenario.transition_amplitude(observable, boundary)?;
    Ok(WeakValue {
        arm: None,
        boundary,
        value: numerator / denominator,
        numerator,
        denominator,
    })
}

/// Weak value of `Π_arm` at `boundary`.
pub fn arm_weak_value(scenario: &Scenario, arm: &str, boundary: usize) -> Result<WeakValue> {
    let proj = arm_projector(scenario.basis(), arm)?;
    let mut wv = weak_value(scenario, &proj, boundary)?;
    wv.arm = Some(arm.to_string());
    Ok(wv)
}

/// Weak values of every canonical coupling slot, in slot order.
pub fn slot_weak_values(scenario: &Scenario, exec: Execution) -> Result<Vec<WeakValue>> {
    checked_denominator(scenario)?;
    exec.try_map(scenario.slots(), |slot| {
        arm_weak_value(scenario, &slot.arm, slot.boundary)
    })
}

fn checked_denominator(scenario: &Scenario) -> Result<Amplitude> {
    let denom = scenario.postselect_amplitude()?;
    let scale = scenario.preselect().norm() * scenario.postselect().norm();
    if denom.norm() <= DENOM_EPS * scale {
        return Err(Error::DegeneratePostselection(denom.norm()));
    }
    Ok(denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerSpec {
    pub name: String,
    pub arm: String,
    pub boundary: usize,
    /// Coupling strength `g`, in pointer position units.
    pub strength: f64,
    /// Position standard deviation `σ` of the initial Gaussian.
    pub width: f64,
}

impl PointerSpec {
    pub fn new(arm: impl Into<String>, boundary: usize, strength: f64) -> PointerSpec {
        let arm = arm.into();
        PointerSpec {
            name: arm.clone(),
            arm,
            boundary,
            strength,
            width: DEFAULT_WIDTH,
        }
    }

    /// Pointer on `arm` at the scenario's canonical slot for that arm.
    pub fn at_slot(scenario: &Scenario, arm: &str, strength: f64) -> Result<PointerSpec> {
        let slot = scenario.slot_for(arm).ok_or_else(|| Error::InvalidPointer {
            name: arm.to_string(),
            reason: "no coupling slot declared for this arm".into(),
        })?;
        Ok(PointerSpec::new(arm, slot.boundary, strength))
    }

    pub fn with_width(mut self, width: f64) -> PointerSpec {
        self.width = width;
        self
    }

    pub fn with_strength(&self, strength: f64) -> PointerSpec {
        PointerSpec {
            strength,
            ..self.clone()
        }
    }

    fn check(&self, scenario: &Scenario) -> Result<()> {
        let bad = |reason: String| Error::InvalidPointer {
            name: self.name.clone(),
            reason,
        };
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(bad(format!("width must be positive, got {}", self.width)));
        }
        if !self.strength.is_finite() {
            return Err(bad("strength must be finite".into()));
        }
        if !scenario.basis().contains(&self.arm) {
            return Err(bad(format!("unknown arm `{}`", self.arm)));
        }
        if self.boundary > scenario.final_boundary() {
            return Err(bad(format!(
                "boundary {} beyond final boundary {}",
                self.boundary,
                scenario.final_boundary()
            )));
        }
        Ok(())
    }
}

/// One term of the joint system ⊗ pointers state.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Unnormalized system component, evolved to the final boundary.
    pub system: StateVector,
    /// Whether pointer `k` has been translated by its strength in this branch.
    pub shifted: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerEnsemble {
    pointers: Vec<PointerSpec>,
    branches: Vec<Branch>,
}

impl PointerEnsemble {
    pub fn pointers(&self) -> &[PointerSpec] {
        &self.pointers
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Pointer offsets of a branch, one per pointer.
    pub fn shifts(&self, branch: &Branch) -> Vec<f64> {
        branch
            .shifted
            .iter()
            .zip(&self.pointers)
            .map(|(&s, p)| if s { p.strength } else { 0.0 })
            .collect()
    }

    /// Sum of all branch system components.
    pub fn system_sum(&self) -> Result<StateVector> {
        let first = self.branches[0].system.clone();
        self.branches[1..]
            .iter()
            .try_fold(first, |acc, b| acc.add(&b.system))
    }
}

/// Evolves the preselected state through the scenario, splitting every
/// branch at each pointer's boundary into its `Π_arm` part (pointer shifted)
/// and the complement (pointer unshifted). Pointers sharing a boundary
/// commute and are applied in list order.
pub fn couple_pointers(scenario: &Scenario, pointers: &[PointerSpec]) -> Result<PointerEnsemble> {
    for p in pointers {
        p.check(scenario)?;
    }
    let projectors: Vec<Operator> = pointers
        .iter()
        .map(|p| arm_projector(scenario.basis(), &p.arm))
        .collect::<Result<_>>()?;

    let mut branches = vec![Branch {
        system: scenario.preselect().clone(),
        shifted: vec![false; pointers.len()],
    }];
    for boundary in 0..=scenario.final_boundary() {
        for (k, p) in pointers.iter().enumerate() {
            if p.boundary != boundary {
                continue;
            }
            let mut split = Vec::with_capacity(branches.len() * 2);
            for br in branches {
                let on_arm = projectors[k].apply(&br.system)?;
                let rest = br.system.sub(&on_arm)?;
                let mut shifted = br.shifted.clone();
                shifted[k] = true;
                split.push(Branch {
                    system: rest,
                    shifted: br.shifted,
                });
                split.push(Branch {
                    system: on_arm,
                    shifted,
                });
            }
            branches = split;
        }
        if let Some(stage) = scenario.stages().get(boundary) {
            for br in &mut branches {
                br.system = stage.unitary().apply(&br.system)?;
            }
        }
    }
    Ok(PointerEnsemble {
        pointers: pointers.to_vec(),
        branches,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerReadout {
    pub name: String,
    /// Post-selected mean position, relative to the initial mean 0.
    pub position_shift: f64,
    /// Post-selected mean momentum, relative to the initial mean 0.
    pub momentum_shift: f64,
    /// Post-selection probability of the coupled run (shared by all pointers).
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub probability: f64,
    pub pointers: Vec<PointerReadout>,
}

/// Projects the ensemble onto `postselect` and returns each pointer's
/// conditional mean position and momentum.
///
/// With real Gaussian pointers of spread `σ` centred at offsets `a`, `b`:
/// `⟨φ_a|φ_b⟩ = exp(−(a−b)²/8σ²)`, `⟨φ_a|x̂|φ_b⟩ = (a+b)/2 ⟨φ_a|φ_b⟩`,
/// `⟨φ_a|p̂|φ_b⟩ = i(a−b)/4σ² ⟨φ_a|φ_b⟩`.
pub fn postselect_and_readout(ensemble: &PointerEnsemble, postselect: &StateVector) -> Result<Readout> {
    let weights: Vec<Complex64> = ensemble
        .branches
        .iter()
        .map(|b| inner(postselect, &b.system))
        .collect::<Result<_>>()?;
    let offsets: Vec<Vec<f64>> = ensemble.branches.iter().map(|b| ensemble.shifts(b)).collect();
    let widths: Vec<f64> = ensemble.pointers.iter().map(|p| p.width).collect();
    let k_count = widths.len();

    let live: Vec<usize> = (0..weights.len()).filter(|&i| weights[i].norm() > 0.0).collect();
    let mut prob = Complex64::new(0.0, 0.0);
    let mut pos = vec![Complex64::new(0.0, 0.0); k_count];
    let mut mom = vec![Complex64::new(0.0, 0.0); k_count];
    for &i in &live {
        for &j in &live {
            let (a, b) = (&offsets[i], &offsets[j]);
            let overlaps: Vec<f64> = (0..k_count)
                .map(|k| (-(a[k] - b[k]).powi(2) / (8.0 * widths[k] * widths[k])).exp())
                .collect();
            let joint: f64 = overlaps.iter().product();
            let t = weights[i].conj() * weights[j] * joint;
            prob += t;
            for k in 0..k_count {
                let var4 = 4.0 * widths[k] * widths[k];
                pos[k] += t * (0.5 * (a[k] + b[k]));
                mom[k] += t * Complex64::new(0.0, (a[k] - b[k]) / var4);
            }
        }
    }
    let probability = prob.re;
    if probability <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let pointers = ensemble
        .pointers
        .iter()
        .enumerate()
        .map(|(k, p)| PointerReadout {
            name: p.name.clone(),
            position_shift: pos[k].re / probability,
            momentum_shift: mom[k].re / probability,
            probability,
        })
        .collect();
    Ok(Readout {
        probability,
        pointers,
    })
}

/// Convenience: couple, post-select on the scenario's own final state, read out.
pub fn simulate_pointers(scenario: &Scenario, pointers: &[PointerSpec]) -> Result<Readout> {
    let ens = couple_pointers(scenario, pointers)?;
    postselect_and_readout(&ens, scenario.postselect())
}

/// Empirical convergence order of an error sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convergence {
    /// Every error is below [`TOL`]: the quantity is exact at every `g`.
    Exact,
    /// Least-squares slope of `ln err` against `ln g`.
    Order(f64),
    /// Fewer than two resolvable errors.
    Undetermined,
}

impl Convergence {
    /// True for `Exact` or a fitted order of at least `min`.
    pub fn at_least(self, min: f64) -> bool {
        match self {
            Convergence::Exact => true,
            Convergence::Order(o) => o >= min,
            Convergence::Undetermined => false,
        }
    }
}

/// Fits `err ≈ C g^order` over the points with `g > 0` and `err > TOL`.
pub fn fit_order(gs: &[f64], errs: &[f64]) -> Convergence {
    let pts: Vec<(f64, f64)> = gs
        .iter()
        .zip(errs)
        .filter(|(&g, _)| g > 0.0)
        .map(|(&g, &e)| (g, e))
        .collect();
    if pts.iter().all(|&(_, e)| e <= TOL) {
        return Convergence::Exact;
    }
    let resolved: Vec<(f64, f64)> = pts
        .into_iter()
        .filter(|&(_, e)| e > TOL)
        .map(|(g, e)| (g.ln(), e.ln()))
        .collect();
    if resolved.len() < 2 {
        return Convergence::Undetermined;
    }
    let n = resolved.len() as f64;
    let mx = resolved.iter().map(|p| p.0).sum::<f64>() / n;
    let my = resolved.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = resolved.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = resolved.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Convergence::Undetermined;
    }
    Convergence::Order(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub g: f64,
    pub position_shift: f64,
    pub momentum_shift: f64,
    /// `shift / g`; `None` at `g = 0`.
    pub ratio: Option<f64>,
    /// `|shift/g − Re(O^w)|`; `None` at `g = 0`.
    pub discrepancy: Option<f64>,
    pub probability: f64,
    /// `|P(g) − P(0)|`
    pub probability_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub arm: String,
    pub boundary: usize,
    pub width: f64,
    pub weak_value: Amplitude,
    pub baseline_probability: f64,
    pub points: Vec<SweepPoint>,
    pub shift_convergence: Convergence,
    pub probability_convergence: Convergence,
}

/// Single-pointer readout over a descending list of strengths, compared with
/// the analytic weak value. The pointer's own `strength` is ignored.
pub fn weak_limit_sweep(scenario: &Scenario, pointer: &PointerSpec, g_values: &[f64]) -> Result<SweepReport> {
    weak_limit_sweep_with(scenario, pointer, g_values, Execution::default())
}

pub fn weak_limit_sweep_with(
    scenario: &Scenario,
    pointer: &PointerSpec,
    g_values: &[f64],
    exec: Execution,
) -> Result<SweepReport> {
    check_sweep(g_values)?;
    pointer.check(scenario)?;
    let wv = arm_weak_value(scenario, &pointer.arm, pointer.boundary)?;
    let baseline = scenario.postselect_probability()?;

    let points = exec.try_map(g_values, |&g| -> Result<SweepPoint> {
        let readout = simulate_pointers(scenario, &[pointer.with_strength(g)])?;
        let r = &readout.pointers[0];
        let ratio = (g > 0.0).then(|| r.position_shift / g);
        Ok(SweepPoint {
            g,
            position_shift: r.position_shift,
            momentum_shift: r.momentum_shift,
            ratio,
            discrepancy: ratio.map(|q| (q - wv.value.re).abs()),
            probability: readout.probability,
            probability_deviation: (readout.probability - baseline).abs(),
        })
    })?;

    let gs: Vec<f64> = points.iter().map(|p| p.g).collect();
    let shift_errs: Vec<f64> = points.iter().map(|p| p.discrepancy.unwrap_or(0.0)).collect();
    let prob_errs: Vec<f64> = points.iter().map(|p| p.probability_deviation).collect();
    Ok(SweepReport {
        arm: pointer.arm.clone(),
        boundary: pointer.boundary,
        width: pointer.width,
        weak_value: wv.value,
        baseline_probability: baseline,
        shift_convergence: fit_order(&gs, &shift_errs),
        probability_convergence: fit_order(&gs, &prob_errs),
        points,
    })
}

fn check_sweep(g_values: &[f64]) -> Result<()> {
    if g_values.is_empty() {
        return Err(Error::InvalidSweep("no coupling strengths given".into()));
    }
    for (i, &g) in g_values.iter().enumerate() {
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidSweep(format!("strength {g} is not a non-negative number")));
        }
        if g == 0.0 && i + 1 != g_values.len() {
            return Err(Error::InvalidSweep("g = 0 may only appear last".into()));
        }
        if i > 0 && g >= g_values[i - 1] {
            return Err(Error::InvalidSweep("strengths must be strictly descending".into()));
        }
    }
    Ok(())
}

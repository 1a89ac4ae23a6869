//! Test-only oracles. Nothing here calls into the weak-value, pointer or
//! optics code paths it is used to check.
#![allow(dead_code)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use weaktrace::evolution::{Node, Scenario, Slot, Stage};
use weaktrace::optics::{Angle, Element};
use weaktrace::{Basis, Pol, StateVector};

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub const MODES: [&str; 7] = ["S", "A", "B", "C", "D", "E", "F"];

fn m(label: &str) -> usize {
    MODES.iter().position(|x| *x == label).unwrap()
}

/// Hand-assembled stage matrices of the reference interferometers,
/// written out column by column from the port assignment:
///
/// * stage 1: `S → (D + iA)/√2`, `A → (iD + A)/√2`, `D → S`
/// * stage 2: `D → (C + iB)/√2`, `B → (iC + B)/√2`, `C → D`
///   (fig2 then rotates B by +π/4 and C by −π/4 in polarization)
/// * stage 3: `B → (iE + F)/√2`, `C → (E + iF)/√2`, `F → B`, `E → C`
pub struct BruteForce {
    pub pol: bool,
    pub dim: usize,
    pub stages: Vec<Vec<Vec<C>>>,
    pub pre: Vec<C>,
    pub post: Vec<C>,
}

impl BruteForce {
    pub fn idx(&self, mode: &str, pol: usize) -> usize {
        if self.pol {
            2 * m(mode) + pol
        } else {
            m(mode)
        }
    }

    pub fn new(pol: bool) -> BruteForce {
        let pd = if pol { 2 } else { 1 };
        let dim = 7 * pd;
        let r = FRAC_1_SQRT_2;
        let path_stage = |images: &[(&str, &[(C, &str)])]| -> Vec<Vec<C>> {
            let mut u = vec![vec![c(0.0, 0.0); dim]; dim];
            let mut mapped = [false; 7];
            for (from, img) in images {
                mapped[m(from)] = true;
                for p in 0..pd {
                    for (amp, to) in img.iter() {
                        u[m(to) * pd + p][m(from) * pd + p] += *amp;
                    }
                }
            }
            for (k, done) in mapped.iter().enumerate() {
                if !done {
                    for p in 0..pd {
                        u[k * pd + p][k * pd + p] = c(1.0, 0.0);
                    }
                }
            }
            u
        };
        let s1 = path_stage(&[
            ("S", &[(c(r, 0.0), "D"), (c(0.0, r), "A")]),
            ("A", &[(c(0.0, r), "D"), (c(r, 0.0), "A")]),
            ("D", &[(c(1.0, 0.0), "S")]),
        ]);
        let mut s2 = path_stage(&[
            ("D", &[(c(r, 0.0), "C"), (c(0.0, r), "B")]),
            ("B", &[(c(0.0, r), "C"), (c(r, 0.0), "B")]),
            ("C", &[(c(1.0, 0.0), "D")]),
        ]);
        if pol {
            // Rotation on (H, V) of B by +π/4 and of C by −π/4, applied after
            // the splitter.
            let mut w = vec![vec![c(0.0, 0.0); dim]; dim];
            for (k, row) in w.iter_mut().enumerate() {
                row[k] = c(1.0, 0.0);
            }
            for (arm, sign) in [("B", 1.0), ("C", -1.0)] {
                let (h, v) = (2 * m(arm), 2 * m(arm) + 1);
                w[h][h] = c(r, 0.0);
                w[h][v] = c(-sign * r, 0.0);
                w[v][h] = c(sign * r, 0.0);
                w[v][v] = c(r, 0.0);
            }
            s2 = matmul(&w, &s2);
        }
        let s3 = path_stage(&[
            ("B", &[(c(0.0, r), "E"), (c(r, 0.0), "F")]),
            ("C", &[(c(r, 0.0), "E"), (c(0.0, r), "F")]),
            ("F", &[(c(1.0, 0.0), "B")]),
            ("E", &[(c(1.0, 0.0), "C")]),
        ]);
        let mut pre = vec![c(0.0, 0.0); dim];
        pre[m("S") * pd] = c(1.0, 0.0);
        let mut post = vec![c(0.0, 0.0); dim];
        post[m("A") * pd] = c(r, 0.0);
        post[m("E") * pd] = c(0.0, r);
        BruteForce {
            pol,
            dim,
            stages: vec![s1, s2, s3],
            pre,
            post,
        }
    }

    pub fn forward(&self, boundary: usize) -> Vec<C> {
        let mut v = self.pre.clone();
        for u in &self.stages[..boundary] {
            v = matvec(u, &v);
        }
        v
    }

    pub fn backward(&self, boundary: usize) -> Vec<C> {
        let mut v = self.post.clone();
        for u in self.stages[boundary..].iter().rev() {
            v = matvec(&dagger(u), &v);
        }
        v
    }

    fn arm_mask(&self, arm: &str) -> Vec<bool> {
        let pd = if self.pol { 2 } else { 1 };
        (0..self.dim).map(|k| k / pd == m(arm)).collect()
    }

    pub fn overlap(&self) -> C {
        dot(&self.post, &self.forward(3))
    }

    pub fn weak_value(&self, arm: &str, boundary: usize) -> C {
        let fwd = self.forward(boundary);
        let bwd = self.backward(boundary);
        let mask = self.arm_mask(arm);
        let num: C = (0..self.dim)
            .filter(|&k| mask[k])
            .map(|k| bwd[k].conj() * fwd[k])
            .sum();
        num / self.overlap()
    }

    pub fn arm_norm(&self, state: &[C], arm: &str) -> f64 {
        let mask = self.arm_mask(arm);
        (0..self.dim)
            .filter(|&k| mask[k])
            .map(|k| state[k].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

pub fn matvec(u: &[Vec<C>], v: &[C]) -> Vec<C> {
    u.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn matmul(a: &[Vec<C>], b: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn dagger(u: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = u.len();
    (0..n)
        .map(|i| (0..n).map(|j| u[j][i].conj()).collect())
        .collect()
}

pub fn dot(bra: &[C], ket: &[C]) -> C {
    bra.iter().zip(ket).map(|(a, b)| a.conj() * b).sum()
}

/// Pointer statistics from an explicit position-space wavefunction.
#[derive(Debug, Clone, Copy)]
pub struct GridReadout {
    pub position: f64,
    pub momentum: f64,
    pub probability: f64,
}

/// Discretized pointer oracle: the joint system ⊗ pointer wavefunction is
/// stored on a periodic grid and `exp(−i g Π ⊗ p̂)` is applied exactly in
/// momentum space via FFT.
pub struct PointerGrid {
    pub points: usize,
    pub half_width: f64,
}

impl PointerGrid {
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points)
            .map(|j| -self.half_width + j as f64 * self.dx())
            .collect()
    }

    pub fn ks(&self) -> Vec<f64> {
        let n = self.points;
        let l = 2.0 * self.half_width;
        (0..n)
            .map(|j| {
                let jj = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * jj / l
            })
            .collect()
    }

    fn gaussian(&self, sigma: f64) -> Vec<C> {
        let norm = (2.0 * PI * sigma * sigma).powf(-0.25);
        self.xs()
            .iter()
            .map(|x| c(norm * (-x * x / (4.0 * sigma * sigma)).exp(), 0.0))
            .collect()
    }

    fn translate(&self, f: &mut [C], g: f64, planner: &mut FftPlanner<f64>) {
        let n = self.points;
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        fwd.process(f);
        for (v, k) in f.iter_mut().zip(self.ks()) {
            *v *= C::from_polar(1.0 / n as f64, -k * g);
        }
        inv.process(f);
    }

    /// One pointer on `arm` at `boundary`; system evolution from the
    /// scenario's stage matrices.
    pub fn single(&self, scenario: &Scenario, arm: &str, boundary: usize, g: f64, sigma: f64) -> GridReadout {
        let basis = scenario.basis();
        let dim = basis.dim();
        let arm_idx: Vec<usize> = basis.arm_indices(basis.mode_index(arm).unwrap()).collect();
        let phi0 = self.gaussian(sigma);
        let pre = scenario.preselect().amplitudes();
        // psi[s][x]
        let mut psi: Vec<Vec<C>> = (0..dim).map(|s| phi0.iter().map(|p| p * pre[s]).collect()).collect();
        let mut planner = FftPlanner::new();
        for b in 0..=scenario.final_boundary() {
            if b == boundary {
                for &s in &arm_idx {
                    self.translate(&mut psi[s], g, &mut planner);
                }
            }
            if let Some(stage) = scenario.stages().get(b) {
                let u = stage.unitary().matrix();
                let mut next = vec![vec![c(0.0, 0.0); self.points]; dim];
                for (i, row) in next.iter_mut().enumerate() {
                    for (j, col) in psi.iter().enumerate() {
                        let uij = u[[i, j]];
                        if uij.norm() == 0.0 {
                            continue;
                        }
                        for (r, v) in row.iter_mut().zip(col) {
                            *r += uij * v;
                        }
                    }
                }
                psi = next;
            }
        }
        let post = scenario.postselect().amplitudes();
        let chi: Vec<C> = (0..self.points)
            .map(|x| (0..dim).map(|s| post[s].conj() * psi[s][x]).sum())
            .collect();
        self.moments(chi, &mut planner)
    }

    fn moments(&self, chi: Vec<C>, planner: &mut FftPlanner<f64>) -> GridReadout {
        let dx = self.dx();
        let w: Vec<f64> = chi.iter().map(|z| z.norm_sqr()).collect();
        let prob: f64 = w.iter().sum::<f64>() * dx;
        let position = self.xs().iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() * dx / prob;
        let mut spec = chi;
        planner.plan_fft_forward(self.points).process(&mut spec);
        let sw: Vec<f64> = spec.iter().map(|z| z.norm_sqr()).collect();
        let momentum = self.ks().iter().zip(&sw).map(|(k, w)| k * w).sum::<f64>() / sw.iter().sum::<f64>();
        GridReadout {
            position,
            momentum,
            probability: prob,
        }
    }

    /// Two pointers on a 2-D grid (axis 0 for `first`, axis 1 for `second`).
    /// Returns the mean positions of both pointers and the probability.
    pub fn pair(
        &self,
        scenario: &Scenario,
        first: (&str, usize, f64),
        second: (&str, usize, f64),
        sigma: f64,
    ) -> (f64, f64, f64) {
        let n = self.points;
        let basis = scenario.basis();
        let dim = basis.dim();
        let phi0 = self.gaussian(sigma);
        let pre = scenario.preselect().amplitudes();
        let mut psi: Vec<Vec<C>> = (0..dim)
            .map(|s| {
                let mut f = vec![c(0.0, 0.0); n * n];
                for i in 0..n {
                    for j in 0..n {
                        f[i * n + j] = phi0[i] * phi0[j] * pre[s];
                    }
                }
                f
            })
            .collect();
        let mut planner = FftPlanner::new();
        let mut shift_axis = |f: &mut Vec<C>, axis: usize, g: f64| {
            let mut line = vec![c(0.0, 0.0); n];
            for a in 0..n {
                for b in 0..n {
                    line[b] = if axis == 0 { f[b * n + a] } else { f[a * n + b] };
                }
                self.translate(&mut line, g, &mut planner);
                for b in 0..n {
                    if axis == 0 {
                        f[b * n + a] = line[b];
                    } else {
                        f[a * n + b] = line[b];
                    }
                }
            }
        };
        for b in 0..=scenario.final_boundary() {
            for (axis, (arm, boundary, g)) in [first, second].into_iter().enumerate() {
                if b == boundary {
                    for s in basis.arm_indices(basis.mode_index(arm).unwrap()) {
                        shift_axis(&mut psi[s], axis, g);
                    }
                }
            }
            if let Some(stage) = scenario.stages().get(b) {
                let u = stage.unitary().matrix();
                let mut next = vec![vec![c(0.0, 0.0); n * n]; dim];
                for (i, row) in next.iter_mut().enumerate() {
                    for (j, col) in psi.iter().enumerate() {
                        let uij = u[[i, j]];
                        if uij.norm() == 0.0 {
                            continue;
                        }
                        for (r, v) in row.iter_mut().zip(col) {
                            *r += uij * v;
                        }
                    }
                }
                psi = next;
            }
        }
        let post = scenario.postselect().amplitudes();
        let xs = self.xs();
        let dx = self.dx();
        let (mut p, mut m0, mut m1) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let chi: C = (0..dim).map(|s| post[s].conj() * psi[s][i * n + j]).sum();
                let w = chi.norm_sqr() * dx * dx;
                p += w;
                m0 += xs[i] * w;
                m1 += xs[j] * w;
            }
        }
        (m0 / p, m1 / p, p)
    }
}

pub fn standard_grid() -> PointerGrid {
    PointerGrid {
        points: 2048,
        half_width: 12.0,
    }
}

const LABELS: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

fn random_angle(rng: &mut impl Rng) -> Angle {
    let den = [1, 2, 3, 4, 6, 8][rng.random_range(0..6)];
    Angle::pi_times(rng.random_range(-2 * den..=2 * den), den)
}

pub fn random_basis(rng: &mut impl Rng) -> Basis {
    let n = rng.random_range(2..=6);
    Basis::new(LABELS[..n].iter().copied(), rng.random_bool(0.5)).unwrap()
}

pub fn random_element(rng: &mut impl Rng, basis: &Basis) -> Element {
    let modes = basis.modes();
    let pick = |rng: &mut dyn rand::RngCore| modes[rng.random_range(0..modes.len())].clone();
    let distinct = |rng: &mut dyn rand::RngCore| {
        let a = pick(rng);
        loop {
            let b = pick(rng);
            if b != a {
                return (a, b);
            }
        }
    };
    let kinds = if basis.polarization() { 5 } else { 4 };
    match rng.random_range(0..kinds) {
        0 => {
            let (a, b) = distinct(rng);
            Element::BeamSplitter {
                inputs: [a.clone(), b.clone()],
                outputs: [a, b],
                angle: random_angle(rng),
            }
        }
        1 => {
            let (i1, i2) = distinct(rng);
            let (o1, o2) = distinct(rng);
            Element::BeamSplitter {
                inputs: [i1, i2],
                outputs: [o1, o2],
                angle: random_angle(rng),
            }
        }
        2 => Element::PhaseShifter {
            arm: pick(rng),
            phase: random_angle(rng),
        },
        3 => {
            let (from, to) = distinct(rng);
            Element::Mirror { from, to }
        }
        _ => Element::WavePlate {
            arm: pick(rng),
            rotation: random_angle(rng),
        },
    }
}

pub fn random_state(rng: &mut impl Rng, basis: &Basis) -> StateVector {
    loop {
        let amps: Vec<C> = (0..basis.dim())
            .map(|_| {
                if rng.random_bool(0.4) {
                    c(0.0, 0.0)
                } else {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                }
            })
            .collect();
        let s = StateVector::new(basis.clone(), amps).unwrap();
        if s.norm() > 0.1 {
            return s.normalized().unwrap();
        }
    }
}

/// A valid scenario built through the library constructors (not the parser).
pub fn random_scenario(rng: &mut impl Rng, id: usize) -> Scenario {
    let basis = random_basis(rng);
    let n_stages = rng.random_range(0..=4);
    let stages: Vec<Stage> = (0..n_stages)
        .map(|k| {
            let elems = (0..rng.random_range(0..=3)).map(|_| random_element(rng, &basis)).collect();
            Stage::from_elements(format!("st{k}"), elems, &basis).unwrap()
        })
        .collect();
    let mut slots = Vec::new();
    for arm in basis.modes() {
        if rng.random_bool(0.6) {
            slots.push(Slot {
                arm: arm.clone(),
                boundary: rng.random_range(0..=n_stages),
            });
        }
    }
    let mut adjacency = Vec::new();
    let mut prev = Node::Source;
    for s in &slots {
        let here = Node::Arm(s.arm.clone());
        adjacency.push((prev, here.clone()));
        prev = here;
    }
    adjacency.push((prev, Node::Detector));
    let pre = random_state(rng, &basis);
    let post = random_state(rng, &basis);
    Scenario::new(format!("random{id}"), basis, stages, pre, post, adjacency, slots)
}

pub fn pol_h() -> Option<Pol> {
    Some(Pol::H)
}

//! Optical elements as operators on a [`Basis`].
//!
//! Beam splitters use the i-on-reflection convention
//! `[[cos θ, i sin θ], [i sin θ, cos θ]]`; `θ = π/4` is a 50/50 splitter.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use ndarray::{array, Array2};
use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{Error, Result};
use crate::qstate::{embed, Basis, Operator, Pol, Subspace, I, ONE, ZERO};

/// An angle `num·π/den` kept as an exact rational multiple of π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Angle {
    num: i64,
    den: i64,
}

impl Angle {
    pub const ZERO: Angle = Angle { num: 0, den: 1 };

    /// `num·π/den`, reduced. Panics if `den == 0`.
    pub fn pi_times(num: i64, den: i64) -> Angle {
        assert!(den != 0, "angle denominator must be nonzero");
        let g = num.gcd(&den).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Angle {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn numerator(self) -> i64 {
        self.num
    }

    pub fn denominator(self) -> i64 {
        self.den
    }

    pub fn radians(self) -> f64 {
        self.num as f64 * PI / self.den as f64
    }
}

impl std::ops::Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle {
            num: -self.num,
            den: self.den,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.num, self.den) {
            (0, _) => f.write_str("0"),
            (1, 1) => f.write_str("pi"),
            (-1, 1) => f.write_str("-pi"),
            (n, 1) => write!(f, "{n}pi"),
            (1, d) => write!(f, "pi/{d}"),
            (-1, d) => write!(f, "-pi/{d}"),
            (n, d) => write!(f, "{n}pi/{d}"),
        }
    }
}

/// Accepts `0`, `pi`, `-pi/4`, `3pi/4`, `3*pi/4`, `+pi/2`.
impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bad = || format!("invalid angle `{s}` (expected a rational multiple of pi, e.g. pi/4)");
        if s == "0" || s == "-0" || s == "+0" {
            return Ok(Angle::ZERO);
        }
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let pos = body.find("pi").ok_or_else(bad)?;
        let coeff = body[..pos].trim_end_matches('*');
        let num: i64 = if coeff.is_empty() {
            1
        } else {
            coeff.parse().map_err(|_| bad())?
        };
        let rest = &body[pos + 2..];
        let den: i64 = if rest.is_empty() {
            1
        } else {
            let d = rest.strip_prefix('/').ok_or_else(bad)?;
            d.parse().map_err(|_| bad())?
        };
        if den <= 0 || (coeff.starts_with(['-', '+'])) {
            return Err(bad());
        }
        Ok(Angle::pi_times(if neg { -num } else { num }, den))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    BeamSplitter,
    PhaseShifter,
    WavePlate,
    Polarizer,
    Mirror,
}

/// A unitary optical element placed inside a stage.
///
/// Polarizers are not stage elements: they are non-unitary and are folded
/// into the post-selected state (see [`polarizer_projector`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    /// Mixes `inputs` and routes them to `outputs`:
    /// `|in₁⟩ → cos θ|out₁⟩ + i sin θ|out₂⟩`, `|in₂⟩ → i sin θ|out₁⟩ + cos θ|out₂⟩`.
    BeamSplitter {
        inputs: [String; 2],
        outputs: [String; 2],
        angle: Angle,
    },
    PhaseShifter { arm: String, phase: Angle },
    WavePlate { arm: String, rotation: Angle },
    /// Redirects `from` into `to` (and `to` back into `from`).
    Mirror { from: String, to: String },
}

impl Element {
    pub fn kind(&self) -> ElementKind {
        match self {
            Element::BeamSplitter { .. } => ElementKind::BeamSplitter,
            Element::PhaseShifter { .. } => ElementKind::PhaseShifter,
            Element::WavePlate { .. } => ElementKind::WavePlate,
            Element::Mirror { .. } => ElementKind::Mirror,
        }
    }

    /// Arms the element touches.
    pub fn arms(&self) -> Vec<&str> {
        match self {
            Element::BeamSplitter {
                inputs, outputs, ..
            } => {
                let mut v: Vec<&str> = inputs.iter().map(String::as_str).collect();
                for o in outputs {
                    if !v.contains(&o.as_str()) {
                        v.push(o);
                    }
                }
                v
            }
            Element::PhaseShifter { arm, .. } | Element::WavePlate { arm, .. } => vec![arm],
            Element::Mirror { from, to } => vec![from, to],
        }
    }

    pub fn operator(&self, basis: &Basis) -> Result<Operator> {
        match self {
            Element::BeamSplitter {
                inputs,
                outputs,
                angle,
            } => routed_beamsplitter(basis, inputs, outputs, angle.radians()),
            Element::PhaseShifter { arm, phase } => phaseshifter(basis, arm, phase.radians()),
            Element::WavePlate { arm, rotation } => waveplate(basis, arm, rotation.radians()),
            Element::Mirror { from, to } => mirror(basis, from, to),
        }
    }
}

fn bs_block(theta: f64) -> Array2<Complex64> {
    let (s, c) = theta.sin_cos();
    array![
        [Complex64::new(c, 0.0), I * s],
        [I * s, Complex64::new(c, 0.0)]
    ]
}

/// In-place beam splitter mixing the two arms of `pair`.
pub fn beamsplitter(basis: &Basis, pair: (&str, &str), theta: f64) -> Result<Operator> {
    if pair.0 == pair.1 {
        return Err(Error::IdenticalOperands(pair.0.to_string()));
    }
    embed(
        &bs_block(theta),
        &Subspace::Modes(vec![pair.0.to_string(), pair.1.to_string()]),
        basis,
    )
}

/// Beam splitter whose input ports feed differently-labelled output arms.
/// The remaining modes are permuted so the whole map stays unitary: output
/// labels not used as inputs are routed back onto the freed input labels.
pub fn routed_beamsplitter(
    basis: &Basis,
    inputs: &[String; 2],
    outputs: &[String; 2],
    theta: f64,
) -> Result<Operator> {
    let mix = beamsplitter(basis, (&inputs[0], &inputs[1]), theta)?;
    let route = routing(basis, inputs, outputs)?;
    route.compose(&mix)
}

/// Swaps the labels `from` and `to`.
pub fn mirror(basis: &Basis, from: &str, to: &str) -> Result<Operator> {
    if from == to {
        return Err(Error::IdenticalOperands(from.to_string()));
    }
    let sigma = swap_map(basis, from, to)?;
    permutation(basis, &sigma)
}

fn swap_map(basis: &Basis, a: &str, b: &str) -> Result<Vec<usize>> {
    let (ia, ib) = (basis.mode_index(a)?, basis.mode_index(b)?);
    let mut sigma: Vec<usize> = (0..basis.modes().len()).collect();
    sigma.swap(ia, ib);
    Ok(sigma)
}

fn routing(basis: &Basis, inputs: &[String; 2], outputs: &[String; 2]) -> Result<Operator> {
    if outputs[0] == outputs[1] {
        return Err(Error::IdenticalOperands(outputs[0].clone()));
    }
    let ins = [basis.mode_index(&inputs[0])?, basis.mode_index(&inputs[1])?];
    let outs = [basis.mode_index(&outputs[0])?, basis.mode_index(&outputs[1])?];
    let n = basis.modes().len();
    let mut sigma: Vec<Option<usize>> = vec![None; n];
    sigma[ins[0]] = Some(outs[0]);
    sigma[ins[1]] = Some(outs[1]);
    let freed: Vec<usize> = ins.iter().copied().filter(|i| !outs.contains(i)).collect();
    let displaced: Vec<usize> = outs.iter().copied().filter(|o| !ins.contains(o)).collect();
    for (&d, &f) in displaced.iter().zip(&freed) {
        sigma[d] = Some(f);
    }
    let sigma: Vec<usize> = sigma
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.unwrap_or(i))
        .collect();
    permutation(basis, &sigma)
}

fn permutation(basis: &Basis, sigma: &[usize]) -> Result<Operator> {
    let d = basis.dim();
    let mut m = Array2::<Complex64>::zeros((d, d));
    for (from, &to) in sigma.iter().enumerate() {
        for p in 0..basis.pol_dim() {
            let pol = Pol::from_index(p);
            m[[basis.index(to, pol), basis.index(from, pol)]] = ONE;
        }
    }
    Operator::from_matrix(basis, m)?.into_unitary()
}

/// Real rotation `[[cos α, −sin α], [sin α, cos α]]` on `(H, V)` of one arm.
pub fn waveplate(basis: &Basis, arm: &str, alpha: f64) -> Result<Operator> {
    if !basis.polarization() {
        return Err(Error::PolarizationDisabled("waveplate"));
    }
    let (s, c) = alpha.sin_cos();
    let rot = array![
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]
    ];
    embed(&rot, &Subspace::Polarization(vec![arm.to_string()]), basis)
}

/// Multiplies the amplitudes on `arm` by `e^{iφ}`.
pub fn phaseshifter(basis: &Basis, arm: &str, phi: f64) -> Result<Operator> {
    embed(
        &array![[Complex64::from_polar(1.0, phi)]],
        &Subspace::Modes(vec![arm.to_string()]),
        basis,
    )
}

/// `Π_x = |x⟩⟨x| ⊗ 1_pol`.
pub fn arm_projector(basis: &Basis, arm: &str) -> Result<Operator> {
    let mode = basis.mode_index(arm)?;
    let d = basis.dim();
    let mut m = Array2::<Complex64>::zeros((d, d));
    for i in basis.arm_indices(mode) {
        m[[i, i]] = ONE;
    }
    Operator::from_matrix(basis, m)?.into_projector()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarizerAxis {
    H,
    V,
    Diag,
    Antidiag,
}

impl PolarizerAxis {
    /// Jones vector of the transmitted polarization, `(H, V)` components.
    pub fn jones(self) -> [Complex64; 2] {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            PolarizerAxis::H => [ONE, ZERO],
            PolarizerAxis::V => [ZERO, ONE],
            PolarizerAxis::Diag => [r, r],
            PolarizerAxis::Antidiag => [r, -r],
        }
    }
}

impl FromStr for PolarizerAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "H" => Ok(PolarizerAxis::H),
            "V" => Ok(PolarizerAxis::V),
            "diag" => Ok(PolarizerAxis::Diag),
            "antidiag" => Ok(PolarizerAxis::Antidiag),
            _ => Err(format!("unknown polarizer axis `{s}`")),
        }
    }
}

/// `1_path ⊗ |axis⟩⟨axis|`. Flagged projector, never unitary.
pub fn polarizer_projector(basis: &Basis, axis: PolarizerAxis) -> Result<Operator> {
    if !basis.polarization() {
        return Err(Error::PolarizationDisabled("polarizer"));
    }
    let v = axis.jones();
    let local = Array2::from_shape_fn((2, 2), |(a, b)| v[a] * v[b].conj());
    embed(&local, &Subspace::Polarization(vec![]), basis)
}

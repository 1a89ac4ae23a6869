//! Staged scenarios and the two-state vector: the preselected state evolved
//! forward and the post-selected state evolved backward to any stage
//! boundary.
//!
//! Boundary `b` sits after the first `b` stages: boundary 0 is the
//! preparation, boundary `stages().len()` is the post-selection.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optics::{polarizer_projector, Element, PolarizerAxis};
use crate::qstate::{inner, Amplitude, Basis, Operator, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    label: String,
    elements: Vec<Element>,
    unitary: Operator,
}

impl Stage {
    /// Composes the elements in order (first listed acts first).
    pub fn from_elements(label: impl Into<String>, elements: Vec<Element>, basis: &Basis) -> Result<Stage> {
        let mut unitary = Operator::identity(basis);
        for e in &elements {
            unitary = e.operator(basis)?.compose(&unitary)?;
        }
        Ok(Stage {
            label: label.into(),
            elements,
            unitary,
        })
    }

    /// Stage from an arbitrary operator with no element provenance. The
    /// operator is not required to be unitary; `validate` reports it if not.
    pub fn from_operator(label: impl Into<String>, op: Operator) -> Stage {
        Stage {
            label: label.into(),
            elements: Vec::new(),
            unitary: op,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }
}

/// Node of the arm graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Source,
    Arm(String),
    Detector,
}

impl Node {
    pub fn arm(&self) -> Option<&str> {
        match self {
            Node::Arm(a) => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Source => f.write_str("SOURCE"),
            Node::Detector => f.write_str("DETECTOR"),
            Node::Arm(a) => f.write_str(a),
        }
    }
}

impl FromStr for Node {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "SOURCE" => Node::Source,
            "DETECTOR" => Node::Detector,
            a => Node::Arm(a.to_string()),
        })
    }
}

/// Canonical coupling location for the weak value of one arm projector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Slot {
    pub arm: String,
    pub boundary: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    basis: Basis,
    stages: Vec<Stage>,
    preselect: StateVector,
    postselect: StateVector,
    adjacency: Vec<(Node, Node)>,
    slots: Vec<Slot>,
}

impl Scenario {
    /// Assembles a scenario without checking its invariants; run
    /// [`crate::scendsl::validate`] to get diagnostics.
    pub fn new(
        name: impl Into<String>,
        basis: Basis,
        stages: Vec<Stage>,
        preselect: StateVector,
        postselect: StateVector,
        adjacency: Vec<(Node, Node)>,
        mut slots: Vec<Slot>,
    ) -> Scenario {
        // Canonical slot order: basis mode order, then boundary.
        slots.sort_by_key(|s| {
            (
                basis.mode_index(&s.arm).unwrap_or(usize::MAX),
                s.boundary,
            )
        });
        Scenario {
            name: name.into(),
            basis,
            stages,
            preselect,
            postselect,
            adjacency,
            slots,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Scenario {
        self.name = name.into();
        self
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn preselect(&self) -> &StateVector {
        &self.preselect
    }

    pub fn postselect(&self) -> &StateVector {
        &self.postselect
    }

    pub fn adjacency(&self) -> &[(Node, Node)] {
        &self.adjacency
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot_for(&self, arm: &str) -> Option<&Slot> {
        self.slots.iter().find(|s| s.arm == arm)
    }

    pub fn final_boundary(&self) -> usize {
        self.stages.len()
    }

    /// Folds a polarizer in front of the detector into the post-selected
    /// state: `|f⟩ → P|f⟩ / |P|f⟩|`.
    pub fn with_polarizer(mut self, axis: PolarizerAxis) -> Result<Scenario> {
        let p = polarizer_projector(&self.basis, axis)?;
        let filtered = p.apply(&self.postselect)?;
        self.postselect = filtered
            .normalized()
            .ok_or(Error::DegeneratePostselection(0.0))?;
        Ok(self)
    }

    pub(crate) fn check_boundary(&self, boundary: usize) -> Result<()> {
        if boundary > self.stages.len() {
            return Err(Error::BoundaryOutOfRange {
                boundary,
                stages: self.stages.len(),
            });
        }
        Ok(())
    }

    /// `U_b ⋯ U_1 |ψ_i⟩`
    pub fn forward_state(&self, boundary: usize) -> Result<StateVector> {
        self.check_boundary(boundary)?;
        self.stages[..boundary]
            .iter()
            .try_fold(self.preselect.clone(), |psi, st| st.unitary.apply(&psi))
    }

    /// `U†_{b+1} ⋯ U†_N |ψ_f⟩`, the post-selected state brought back to
    /// boundary `b` and stored as a ket.
    pub fn backward_state(&self, boundary: usize) -> Result<StateVector> {
        self.check_boundary(boundary)?;
        self.stages[boundary..]
            .iter()
            .rev()
            .try_fold(self.postselect.clone(), |phi, st| {
                st.unitary.adjoint().apply(&phi)
            })
    }

    /// `⟨backward(b)| O |forward(b)⟩`
    pub fn transition_amplitude(&self, observable: &Operator, boundary: usize) -> Result<Amplitude> {
        let fwd = self.forward_state(boundary)?;
        let bwd = self.backward_state(boundary)?;
        inner(&bwd, &observable.apply(&fwd)?)
    }

    /// `⟨ψ_f| U_N ⋯ U_1 |ψ_i⟩`; independent of the boundary it is evaluated at.
    pub fn postselect_amplitude(&self) -> Result<Amplitude> {
        inner(&self.postselect, &self.forward_state(self.final_boundary())?)
    }

    pub fn postselect_probability(&self) -> Result<f64> {
        Ok(self.postselect_amplitude()?.norm_sqr())
    }

    pub fn total_unitary(&self) -> Result<Operator> {
        self.stages
            .iter()
            .try_fold(Operator::identity(&self.basis), |acc, st| st.unitary.compose(&acc))
    }
}

//! Sequential one-way LOCC measurement built from equi-diagonal bases.
//!
//! Parties measure one after another in a fixed order. At every node of the
//! outcome tree the acting party takes the dyad `|ψ2⟩⟨ψ1|` conditioned on all
//! announced outcomes, traces out the parties that have not measured yet, and
//! measures in a basis that makes the diagonal of that reduced matrix
//! constant. The constant is the child's stage amplitude, so siblings share
//! it, and summing over a full basis gives back the parent's amplitude:
//! `D_child · child = parent`. Telescoping from the root, every leaf carries
//! `⟨ψ1|ψ2⟩ / D` and `Σ |B_i| = |⟨ψ1|ψ2⟩|`.

use num_complex::Complex64;

use crate::defaults::TOL_EQUIDIAG;
use crate::equidiag::equi_diagonalize;
use crate::measure::bhattacharyya_angle_raw;
use crate::statekit::{condition_dyad, kron_vectors, partial_trace_dyad, state_overlap, Dyad, PartyLayout, PureState};
use crate::{CMatrix, Error, Result};

/// One measurement step: the party acting after `history` has been announced.
#[derive(Debug, Clone)]
pub struct ProtocolNode {
    /// Number of parties that have already measured.
    pub depth: usize,
    /// Outcomes announced so far, in measurement order.
    pub history: Vec<usize>,
    /// Party (layout index) measuring at this node.
    pub party: usize,
    /// Measurement basis for `party`, one column per outcome.
    pub basis: CMatrix,
    /// Trace over the unmeasured parties of the dyad conditioned on `history`.
    pub stage_amplitude: Complex64,
    /// Indices into `Transcript::nodes`, or into `Transcript::leaves` for the
    /// last party.
    pub children: Vec<usize>,
    /// Diagonal residual of `basis` on the reduced matrix.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Leaf {
    /// Outcome index of each party, in measurement order.
    pub outcome: Vec<usize>,
    /// `⟨φ|ψ2⟩⟨ψ1|φ⟩` for the leaf's product vector.
    pub amplitude: Complex64,
    /// Product vector in layout order.
    pub vector: Vec<Complex64>,
    pub p1: f64,
    pub p2: f64,
}

impl Leaf {
    /// Dash-separated outcome string, e.g. `1-0-2`.
    pub fn outcome_label(&self) -> String {
        self.outcome.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
    }
}

#[derive(Debug, Clone)]
pub struct Transcript {
    pub layout: PartyLayout,
    pub order: Vec<usize>,
    pub s1: PureState,
    pub s2: PureState,
    /// Pre-order; `nodes[0]` is the root.
    pub nodes: Vec<ProtocolNode>,
    /// Canonical outcome order (lexicographic in measurement order).
    pub leaves: Vec<Leaf>,
}

impl Transcript {
    pub fn overlap(&self) -> Complex64 {
        state_overlap(&self.s1, &self.s2).expect("transcript states share a layout")
    }

    /// Product of the dimensions of the first `depth` parties in order.
    fn measured_dim(&self, depth: usize) -> usize {
        self.order[..depth].iter().map(|&p| self.layout.dim(p)).product()
    }
}

/// Measurement order matching the layout order.
pub fn default_order(layout: &PartyLayout) -> Vec<usize> {
    (0..layout.parties()).collect()
}

pub fn validate_order(layout: &PartyLayout, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; layout.parties()];
    if order.len() != layout.parties() {
        return Err(Error::Usage(format!("order {order:?} must list all {} parties", layout.parties())));
    }
    for &p in order {
        if p >= seen.len() || seen[p] {
            return Err(Error::Usage(format!("order {order:?} is not a permutation of the parties")));
        }
        seen[p] = true;
    }
    Ok(())
}

pub fn run_locc(s1: &PureState, s2: &PureState, order: &[usize]) -> Result<Transcript> {
    run_locc_with_tol(s1, s2, order, TOL_EQUIDIAG)
}

/// Build the full outcome tree. `tol` is the relative equi-diagonalization
/// tolerance at every node.
pub fn run_locc_with_tol(s1: &PureState, s2: &PureState, order: &[usize], tol: f64) -> Result<Transcript> {
    let dyad = Dyad::from_states(s1, s2)?;
    let layout = s1.layout().clone();
    validate_order(&layout, order)?;
    let mut t = Transcript {
        layout: layout.clone(),
        order: order.to_vec(),
        s1: s1.clone(),
        s2: s2.clone(),
        nodes: Vec::new(),
        leaves: Vec::new(),
    };
    let remaining: Vec<usize> = (0..layout.parties()).collect();
    let mut factors: Vec<Vec<Complex64>> = layout.dims().iter().map(|&d| vec![Complex64::new(0.0, 0.0); d]).collect();
    build(&mut t, dyad, remaining, Vec::new(), &mut factors, tol)?;
    Ok(t)
}

fn build(
    t: &mut Transcript,
    dyad: Dyad,
    remaining: Vec<usize>,
    history: Vec<usize>,
    factors: &mut Vec<Vec<Complex64>>,
    tol: f64,
) -> Result<usize> {
    let depth = history.len();
    let party = t.order[depth];
    let pos = remaining.iter().position(|&p| p == party).expect("order lists remaining parties");
    let reduced = partial_trace_dyad(&dyad, &[pos])?;
    let eq = equi_diagonalize(&reduced, tol).map_err(|e| match e {
        Error::Convergence { residual, .. } => Error::Convergence {
            residual,
            path: format!(" at party {party} after outcomes {history:?}"),
        },
        other => other,
    })?;

    let id = t.nodes.len();
    t.nodes.push(ProtocolNode {
        depth,
        history: history.clone(),
        party,
        basis: eq.basis.clone(),
        stage_amplitude: dyad.trace(),
        children: Vec::new(),
        residual: eq.residual,
    });

    let last = remaining.len() == 1;
    let mut children = Vec::with_capacity(eq.basis.ncols());
    for j in 0..eq.basis.ncols() {
        let e = eq.basis_vector(j);
        factors[party] = e.clone();
        let mut h = history.clone();
        h.push(j);
        if last {
            children.push(push_leaf(t, h, factors));
        } else {
            let child = condition_dyad(&dyad, pos, &e)?;
            let rest: Vec<usize> = remaining.iter().copied().filter(|&p| p != party).collect();
            children.push(build(t, child, rest, h, factors, tol)?);
        }
    }
    t.nodes[id].children = children;
    Ok(id)
}

fn push_leaf(t: &mut Transcript, outcome: Vec<usize>, factors: &[Vec<Complex64>]) -> usize {
    let vector = kron_vectors(factors);
    let a1: Complex64 = vector.iter().zip(t.s1.amps()).map(|(p, s)| p.conj() * s).sum();
    let a2: Complex64 = vector.iter().zip(t.s2.amps()).map(|(p, s)| p.conj() * s).sum();
    t.leaves.push(Leaf { outcome, amplitude: a2 * a1.conj(), vector, p1: a1.norm_sqr(), p2: a2.norm_sqr() });
    t.leaves.len() - 1
}

/// `arccos Σ |B_i|`. Since `|B_i| = √(p1_i p2_i)` this is the Bhattacharyya
/// angle of the two leaf distributions, evaluated in half-angle form.
pub fn locc_distance(t: &Transcript) -> f64 {
    let p1: Vec<f64> = t.leaves.iter().map(|l| l.p1).collect();
    let p2: Vec<f64> = t.leaves.iter().map(|l| l.p2).collect();
    bhattacharyya_angle_raw(&p1, &p2).expect("leaf lists have equal length")
}

/// `Σ_i |B_i|`.
pub fn leaf_amplitude_sum(t: &Transcript) -> f64 {
    t.leaves.iter().map(|l| l.amplitude.norm()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeReport {
    /// Largest pairwise difference between sibling stage amplitudes.
    pub sibling: f64,
    /// Largest `|D_child · child − parent|`.
    pub parent_child: f64,
    /// Largest `|(measured dimension) · amplitude − ⟨ψ1|ψ2⟩|` over nodes and leaves.
    pub telescoped: f64,
}

impl CascadeReport {
    pub fn max(&self) -> f64 {
        self.sibling.max(self.parent_child).max(self.telescoped)
    }
}

/// Recompute the cascade identities from the stored tree.
pub fn check_stage_cascade(t: &Transcript) -> CascadeReport {
    let overlap = t.overlap();
    let parties = t.layout.parties();
    let mut rep = CascadeReport { sibling: 0.0, parent_child: 0.0, telescoped: 0.0 };
    for node in &t.nodes {
        let child_amps: Vec<Complex64> = if node.depth + 1 == parties {
            node.children.iter().map(|&c| t.leaves[c].amplitude).collect()
        } else {
            node.children.iter().map(|&c| t.nodes[c].stage_amplitude).collect()
        };
        let d_child = child_amps.len() as f64;
        for (a, x) in child_amps.iter().enumerate() {
            for y in &child_amps[a + 1..] {
                rep.sibling = rep.sibling.max((x - y).norm());
            }
            rep.parent_child = rep.parent_child.max((x * d_child - node.stage_amplitude).norm());
        }
        let scale = t.measured_dim(node.depth) as f64;
        rep.telescoped = rep.telescoped.max((node.stage_amplitude * scale - overlap).norm());
    }
    let total = t.layout.total_dim() as f64;
    for leaf in &t.leaves {
        rep.telescoped = rep.telescoped.max((leaf.amplitude * total - overlap).norm());
    }
    rep
}

/// Invariants of a finished transcript, each as a maximum deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranscriptInvariants {
    /// `max_i |B_i − ⟨ψ1|ψ2⟩/D|`.
    pub leaf_constancy: f64,
    /// `|Σ|B_i| − |⟨ψ1|ψ2⟩||`.
    pub optimality: f64,
    /// `max |Σ |φ_i⟩⟨φ_i| − I|`.
    pub completeness: f64,
    /// `max(|Σ p1 − 1|, |Σ p2 − 1|)`.
    pub probability: f64,
    pub cascade: CascadeReport,
}

impl TranscriptInvariants {
    pub fn holds(&self, tol: f64) -> bool {
        self.leaf_constancy <= tol
            && self.optimality <= tol
            && self.completeness <= tol
            && self.probability <= tol
            && self.cascade.max() <= tol
    }
}

pub fn verify_transcript(t: &Transcript) -> TranscriptInvariants {
    let overlap = t.overlap();
    let d = t.layout.total_dim();
    let tau = overlap / d as f64;
    let leaf_constancy = t.leaves.iter().map(|l| (l.amplitude - tau).norm()).fold(0.0, f64::max);
    let optimality = (leaf_amplitude_sum(t) - overlap.norm()).abs();

    let mut sum = CMatrix::zeros(d, d);
    for leaf in &t.leaves {
        for c in 0..d {
            let vc = leaf.vector[c].conj();
            for r in 0..d {
                sum[(r, c)] += leaf.vector[r] * vc;
            }
        }
    }
    let mut completeness = 0.0f64;
    for c in 0..d {
        for r in 0..d {
            let target = if r == c { 1.0 } else { 0.0 };
            completeness = completeness.max((sum[(r, c)] - target).norm());
        }
    }
    let p1: f64 = t.leaves.iter().map(|l| l.p1).sum();
    let p2: f64 = t.leaves.iter().map(|l| l.p2).sum();
    TranscriptInvariants {
        leaf_constancy,
        optimality,
        completeness,
        probability: (p1 - 1.0).abs().max((p2 - 1.0).abs()),
        cascade: check_stage_cascade(t),
    }
}

/// Which state a leaf outcome points to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identified {
    First,
    Second,
    /// Probability at most `1e-18` under both states.
    Either,
}

#[derive(Debug, Clone)]
pub struct DiscriminationTable {
    pub transcript: Transcript,
    /// One entry per leaf, aligned with `transcript.leaves`.
    pub identified: Vec<Identified>,
    /// `max_i min(p1_i, p2_i)`.
    pub worst_confusion: f64,
}

/// Threshold under which a leaf probability counts as zero.
pub const ZERO_PROBABILITY: f64 = 1e-18;

/// Run the protocol on an orthogonal pair and read off which state each
/// outcome identifies.
pub fn discriminate_orthogonal(s1: &PureState, s2: &PureState, order: &[usize]) -> Result<DiscriminationTable> {
    let ov = state_overlap(s1, s2)?;
    if ov.norm() > 1e-10 {
        return Err(Error::Usage(format!("states are not orthogonal: |<s1|s2>| = {:e}", ov.norm())));
    }
    let transcript = run_locc(s1, s2, order)?;
    let identified = transcript
        .leaves
        .iter()
        .map(|l| {
            if l.p1 <= ZERO_PROBABILITY && l.p2 <= ZERO_PROBABILITY {
                Identified::Either
            } else if l.p1 >= l.p2 {
                Identified::First
            } else {
                Identified::Second
            }
        })
        .collect();
    let worst_confusion = transcript.leaves.iter().map(|l| l.p1.min(l.p2)).fold(0.0, f64::max);
    Ok(DiscriminationTable { transcript, identified, worst_confusion })
}

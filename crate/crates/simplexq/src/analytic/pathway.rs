//! Probability that a request's service type does not escalate: given the
//! current request holds type `j`, the chance the next one is classified at
//! type `j` or below.
//!
//! With exponential downloads at equal rates and every server busy, the
//! `1 + 2t` copies of the head request race; `j` recovery groups lead by one
//! completed copy. The head departs next with probability
//! `p_j^D = (1 + j) / (1 + 2t)`, and a non-leading group gains its first
//! completion (moving `j -> j + 1`) with probability
//! `p_j^(+1) = 2(t - j) / (1 + 2t)`. The no-escalation event satisfies
//!
//! ```text
//! B_t = p_t^D,    B_j = p_j^D + p_j^(+1) B_(j+1)
//! ```
//!
//! and `B_j > 1/2` for every `0 <= j <= t`: types are biased downward, the
//! root of the low-occupancy service-type mixtures.

/// No-escalation probability `B_j` for a system with `t` recovery groups of
/// which `j` currently lead by one completed copy.
pub fn conj_pathway_prob(t: usize, j: usize) -> f64 {
    assert!(j <= t, "leading group count {j} exceeds group count {t}");
    let denom = (1 + 2 * t) as f64;
    let mut b = (1 + t) as f64 / denom;
    for i in (j..t).rev() {
        let depart = (1 + i) as f64 / denom;
        let advance = (2 * (t - i)) as f64 / denom;
        b = depart + advance * b;
    }
    b
}

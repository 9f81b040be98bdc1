//! Deployment patterns: the ways an ordered chain of `n` network functions
//! can be distributed over the `m` compute nodes of a path while keeping
//! chain order. A pattern is a count vector of length `m` summing to `n`;
//! its position in the lexicographic enumeration is the pattern-agent action
//! index, so the order here is load-bearing and must never change.

use thiserror::Error;

use crate::network::CandidatePath;
use crate::types::NodeId;
use crate::workload::SfcRequest;

#[derive(Debug, Error, PartialEq)]
pub enum PatternError {
    #[error("pattern domain requires 1 <= n, m <= {MAX_PATTERN_DIMENSION}, got n={n}, m={m}")]
    Domain { n: usize, m: usize },
    #[error("pattern shape mismatch: {0}")]
    Shape(String),
}

/// Largest chain or path size the enumerator accepts. Operational sizes stay
/// within 4; the slack is headroom for cross-checks.
pub const MAX_PATTERN_DIMENSION: usize = 16;

/// VNFs assigned to each compute node along the path, in path order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pattern {
    pub counts: Vec<usize>,
}

impl Pattern {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

fn check_domain(n: usize, m: usize) -> Result<(), PatternError> {
    if n < 1 || m < 1 || n > MAX_PATTERN_DIMENSION || m > MAX_PATTERN_DIMENSION {
        return Err(PatternError::Domain { n, m });
    }
    Ok(())
}

/// Number of ways to place an ordered chain of `n` VNFs on `m` path nodes:
/// the sum over i of C(m,i)·C(n−1,i−1), where i counts the nodes actually
/// used. Agrees with the closed form C(n+m−1, m−1).
pub fn pattern_count(n: usize, m: usize) -> Result<u64, PatternError> {
    check_domain(n, m)?;
    let mut total: u128 = 0;
    for used in 1..=m.min(n) {
        total += binomial(m as u128, used as u128) * binomial((n - 1) as u128, (used - 1) as u128);
    }
    u64::try_from(total).map_err(|_| PatternError::Domain { n, m })
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - i) / (i + 1);
    }
    result
}

/// All patterns for `n` VNFs on `m` nodes, in lexicographic count-vector
/// order. The position of a pattern in this list is its action index.
pub fn enumerate_patterns(n: usize, m: usize) -> Result<Vec<Pattern>, PatternError> {
    check_domain(n, m)?;
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(m);
    fill(n, m, &mut prefix, &mut out);
    Ok(out)
}

fn fill(remaining: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Pattern>) {
    if slots == 1 {
        prefix.push(remaining);
        out.push(Pattern {
            counts: prefix.clone(),
        });
        prefix.pop();
        return;
    }
    for first in 0..=remaining {
        prefix.push(first);
        fill(remaining - first, slots - 1, prefix, out);
        prefix.pop();
    }
}

/// Expands a pattern into the per-VNF host list: node `k` of the path hosts
/// the next `counts[k]` VNFs of the chain.
pub fn pattern_to_placement(
    pattern: &Pattern,
    path: &CandidatePath,
    request: &SfcRequest,
) -> Result<Vec<NodeId>, PatternError> {
    let compute = path.compute_nodes();
    if pattern.counts.len() != compute.len() {
        return Err(PatternError::Shape(format!(
            "pattern has {} slots but the path has {} compute nodes",
            pattern.counts.len(),
            compute.len()
        )));
    }
    if pattern.total() != request.vnf_count() {
        return Err(PatternError::Shape(format!(
            "pattern places {} VNFs but the request has {}",
            pattern.total(),
            request.vnf_count()
        )));
    }
    let mut placement = Vec::with_capacity(request.vnf_count());
    for (node, count) in compute.iter().zip(&pattern.counts) {
        placement.extend(std::iter::repeat(*node).take(*count));
    }
    Ok(placement)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_known_values() {
        assert_eq!(pattern_count(3, 2).unwrap(), 4);
        assert_eq!(pattern_count(2, 3).unwrap(), 6);
        assert_eq!(pattern_count(3, 3).unwrap(), 10);
        assert_eq!(pattern_count(4, 4).unwrap(), 35);
        assert_eq!(pattern_count(1, 1).unwrap(), 1);
    }

    #[test]
    fn count_matches_closed_form_identity() {
        for n in 1..=8usize {
            for m in 1..=8usize {
                let closed = binomial((n + m - 1) as u128, (m - 1) as u128) as u64;
                assert_eq!(pattern_count(n, m).unwrap(), closed, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(pattern_count(0, 2).is_err());
        assert!(pattern_count(2, 0).is_err());
        assert!(enumerate_patterns(17, 2).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let patterns = enumerate_patterns(3, 2).unwrap();
        let counts: Vec<&[usize]> = patterns.iter().map(|p| p.counts.as_slice()).collect();
        assert_eq!(counts, vec![&[0, 3][..], &[1, 2], &[2, 1], &[3, 0]]);

        let patterns = enumerate_patterns(1, 2).unwrap();
        let counts: Vec<&[usize]> = patterns.iter().map(|p| p.counts.as_slice()).collect();
        assert_eq!(counts, vec![&[0, 1][..], &[1, 0]]);
    }

    #[test]
    fn enumeration_length_equals_count_and_is_sorted() {
        for n in 1..=6usize {
            for m in 1..=6usize {
                let patterns = enumerate_patterns(n, m).unwrap();
                assert_eq!(patterns.len() as u64, pattern_count(n, m).unwrap());
                for p in &patterns {
                    assert_eq!(p.total(), n);
                    assert_eq!(p.counts.len(), m);
                }
                for w in patterns.windows(2) {
                    assert!(w[0].counts < w[1].counts);
                }
            }
        }
    }

    #[test]
    fn four_by_four_contains_the_reference_pattern() {
        let patterns = enumerate_patterns(4, 4).unwrap();
        assert!(patterns.iter().any(|p| p.counts == vec![1, 0, 2, 1]));
    }
}

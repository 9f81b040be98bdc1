//! The constraint engine: chain availability, end-to-end delay, capacity
//! checks against the ledger, the greedy core-configuration loop, and the
//! admission reward.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::network::{CandidatePath, ResourceLedger};
use crate::patterns::Pattern;
use crate::types::NodeId;
use crate::workload::SfcRequest;

#[derive(Debug, Error)]
pub enum FeasibilityError {
    #[error("malformed deployment: {0}")]
    Structure(String),
}

/// Cores granted to one VNF: its base demand plus optional boost cores
/// (speed) and replica cores (availability).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct VnfAllocation {
    pub base: u32,
    pub boost: u32,
    pub replicas: u32,
}

impl VnfAllocation {
    pub fn base_only(base: u32) -> VnfAllocation {
        VnfAllocation {
            base,
            boost: 0,
            replicas: 0,
        }
    }

    /// Cores charged on the hosting node.
    pub fn total(&self) -> u32 {
        self.base + self.boost + self.replicas
    }

    /// Cores that actually process traffic; replicas are standby.
    pub fn processing(&self) -> u32 {
        self.base + self.boost
    }
}

/// A concrete accepted placement: the path, the pattern distributing the
/// chain over its compute nodes, the expanded per-VNF hosts, and the core
/// grants.
#[derive(Clone, Debug)]
pub struct Deployment {
    pub path: CandidatePath,
    pub pattern: Pattern,
    pub placement: Vec<NodeId>,
    pub allocations: Vec<VnfAllocation>,
}

impl Deployment {
    /// Total cores charged per node, aggregated over co-located VNFs.
    pub fn cores_by_node(&self) -> BTreeMap<NodeId, u32> {
        let mut demand = BTreeMap::new();
        for (node, alloc) in self.placement.iter().zip(&self.allocations) {
            *demand.entry(*node).or_insert(0) += alloc.total();
        }
        demand
    }

    /// Checks internal consistency against the request it claims to serve.
    pub fn validate(&self, request: &SfcRequest) -> Result<(), FeasibilityError> {
        let n = request.vnf_count();
        if self.pattern.counts.len() != self.path.compute_len() {
            return Err(FeasibilityError::Structure(format!(
                "pattern covers {} nodes but the path has {}",
                self.pattern.counts.len(),
                self.path.compute_len()
            )));
        }
        if self.pattern.total() != n || self.placement.len() != n || self.allocations.len() != n {
            return Err(FeasibilityError::Structure(format!(
                "deployment sized for {} VNFs but the request has {n}",
                self.placement.len()
            )));
        }
        let mut expanded = Vec::with_capacity(n);
        for (node, count) in self.path.compute_nodes().iter().zip(&self.pattern.counts) {
            expanded.extend(std::iter::repeat(*node).take(*count));
        }
        if expanded != self.placement {
            return Err(FeasibilityError::Structure(
                "placement does not expand the pattern in path order".into(),
            ));
        }
        for (k, alloc) in self.allocations.iter().enumerate() {
            if alloc.base != request.vnfs[k].base_cores {
                return Err(FeasibilityError::Structure(format!(
                    "VNF {k} base cores {} do not match the request's {}",
                    alloc.base, request.vnfs[k].base_cores
                )));
            }
            if alloc.boost > 0 && !request.boost_flags[k] {
                return Err(FeasibilityError::Structure(format!(
                    "VNF {k} holds boost cores without the boost flag"
                )));
            }
            if alloc.replicas > 0 && !request.replica_flags[k] {
                return Err(FeasibilityError::Structure(format!(
                    "VNF {k} holds replicas without the replica flag"
                )));
            }
        }
        Ok(())
    }
}

/// Constants of the constraint model, shared by every request.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ConstraintConfig {
    /// Availability of a single VNF instance.
    pub vnf_availability: f64,
    /// Per-core processing speed, in cycles per second.
    pub cycles_per_second: f64,
    /// Added cores per request are capped at this multiple of the base total.
    pub budget_factor: u32,
}

impl Default for ConstraintConfig {
    fn default() -> ConstraintConfig {
        ConstraintConfig {
            vnf_availability: 0.99,
            cycles_per_second: 1.0e9,
            budget_factor: 2,
        }
    }
}

/// Availability of the whole chain: the product over VNFs of
/// 1 − (1−θ)^(1+r), where r is the VNF's replica count.
pub fn chain_availability(allocs: &[VnfAllocation], vnf_availability: f64) -> f64 {
    allocs
        .iter()
        .map(|a| 1.0 - (1.0 - vnf_availability).powi(1 + a.replicas as i32))
        .product()
}

/// End-to-end delay in seconds: link transmission plus per-VNF processing
/// w / ((base + boost) · τ). Replica cores never speed up processing.
pub fn chain_delay_s(
    path: &CandidatePath,
    request: &SfcRequest,
    allocs: &[VnfAllocation],
    cycles_per_second: f64,
) -> f64 {
    let processing: f64 = request
        .vnfs
        .iter()
        .zip(allocs)
        .map(|(vnf, alloc)| vnf.workload_cycles / (alloc.processing() as f64 * cycles_per_second))
        .sum();
    path.transmission_delay_s + processing
}

/// Per-constraint verdicts for one deployment against one ledger state.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct FeasibilityReport {
    pub bandwidth_ok: bool,
    pub compute_ok: bool,
    pub reliability_ok: bool,
    pub delay_ok: bool,
    pub availability: f64,
    pub delay_s: f64,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.bandwidth_ok && self.compute_ok && self.reliability_ok && self.delay_ok
    }
}

/// Evaluates all four constraint families at the current ledger instant.
///
/// Capacity holds for the request's whole lifetime if it holds now: later
/// arrivals are checked against their own instant, and departures only free
/// resources.
pub fn check_feasible(
    ledger: &ResourceLedger,
    request: &SfcRequest,
    deployment: &Deployment,
    cfg: &ConstraintConfig,
) -> FeasibilityReport {
    let bandwidth_ok = deployment
        .path
        .links
        .iter()
        .all(|l| ledger.residual_bandwidth(*l) >= request.bandwidth);
    let compute_ok = deployment
        .cores_by_node()
        .iter()
        .all(|(node, demand)| *demand <= ledger.residual_cores(*node));
    let availability = chain_availability(&deployment.allocations, cfg.vnf_availability);
    let delay_s = chain_delay_s(
        &deployment.path,
        request,
        &deployment.allocations,
        cfg.cycles_per_second,
    );
    FeasibilityReport {
        bandwidth_ok,
        compute_ok,
        reliability_ok: availability >= request.reliability_bound,
        delay_ok: delay_s <= request.delay_bound_s,
        availability,
        delay_s,
    }
}

/// Grants extra cores until the availability and delay bounds hold on this
/// path, or returns `None` when the request must be dropped.
///
/// Starting from the base allocation, the loop adds one replica core at a
/// time over the replica-eligible VNFs in chain order (wrapping around)
/// until availability is met, then one boost core at a time over the
/// boost-eligible VNFs until delay is met. Additions stop at the budget cap;
/// a deficit with no eligible VNF is unservable.
pub fn configure_vnfs(
    request: &SfcRequest,
    path: &CandidatePath,
    cfg: &ConstraintConfig,
) -> Option<Vec<VnfAllocation>> {
    let mut allocs: Vec<VnfAllocation> = request
        .vnfs
        .iter()
        .map(|v| VnfAllocation::base_only(v.base_cores))
        .collect();
    let budget = cfg.budget_factor * request.total_base_cores();
    let mut added = 0u32;

    let eligible = |flags: &[bool]| -> Vec<usize> {
        flags
            .iter()
            .enumerate()
            .filter_map(|(k, set)| set.then_some(k))
            .collect()
    };

    let replica_targets = eligible(&request.replica_flags);
    let mut cursor = 0;
    while chain_availability(&allocs, cfg.vnf_availability) < request.reliability_bound {
        if replica_targets.is_empty() || added == budget {
            return None;
        }
        allocs[replica_targets[cursor]].replicas += 1;
        cursor = (cursor + 1) % replica_targets.len();
        added += 1;
    }

    let boost_targets = eligible(&request.boost_flags);
    let mut cursor = 0;
    while chain_delay_s(path, request, &allocs, cfg.cycles_per_second) > request.delay_bound_s {
        if boost_targets.is_empty() || added == budget {
            return None;
        }
        allocs[boost_targets[cursor]].boost += 1;
        cursor = (cursor + 1) % boost_targets.len();
        added += 1;
    }

    Some(allocs)
}

/// Profit of an accepted request: bandwidth · total base cores · duration,
/// discounted by the share of granted cores that do base work.
pub fn compute_reward(request: &SfcRequest, allocs: &[VnfAllocation]) -> f64 {
    let base: u32 = allocs.iter().map(|a| a.base).sum();
    let extra: u32 = allocs.iter().map(|a| a.boost + a.replicas).sum();
    let efficiency = base as f64 / (base + extra) as f64;
    request.bandwidth.as_gbps() * base as f64 * request.duration() as f64 * efficiency
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{path_through, request_with_chain, single_path_graph};

    #[test]
    fn availability_matches_hand_values() {
        let one = vec![VnfAllocation {
            base: 1,
            boost: 0,
            replicas: 1,
        }];
        assert!((chain_availability(&one, 0.9) - 0.99).abs() < 1e-12);

        let two = vec![VnfAllocation::base_only(1), VnfAllocation::base_only(1)];
        assert!((chain_availability(&two, 0.9) - 0.81).abs() < 1e-12);
    }

    #[test]
    fn availability_matches_direct_product() {
        let theta: f64 = 0.99;
        let allocs = [1u32, 2, 0].map(|r| VnfAllocation {
            base: 1,
            boost: 0,
            replicas: r,
        });
        let direct: f64 = [1, 2, 0]
            .iter()
            .map(|r| 1.0 - (1.0 - theta).powi(1 + r))
            .product();
        assert!((chain_availability(&allocs, theta) - direct).abs() < 1e-12);
    }

    #[test]
    fn delay_matches_hand_values() {
        let g = single_path_graph(&[0.0, 0.0, 0.0], 32);
        let path = path_through(&g);
        let request = request_with_chain(&[(2, 2.0e9)], &g);
        let allocs = vec![VnfAllocation::base_only(2)];
        assert!((chain_delay_s(&path, &request, &allocs, 1.0e9) - 1.0).abs() < 1e-9);

        let boosted = vec![VnfAllocation {
            base: 2,
            boost: 2,
            replicas: 0,
        }];
        assert!((chain_delay_s(&path, &request, &boosted, 1.0e9) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn delay_sums_links_and_processing() {
        let g = single_path_graph(&[0.001, 0.002, 0.003], 32);
        let path = path_through(&g);
        let request = request_with_chain(&[(1, 4.0e6), (1, 4.0e6)], &g);
        let allocs = vec![VnfAllocation::base_only(1), VnfAllocation::base_only(1)];
        let total = chain_delay_s(&path, &request, &allocs, 1.0e9);
        assert!((total - 0.014).abs() < 1e-12);
    }

    #[test]
    fn replicas_do_not_change_delay() {
        let g = single_path_graph(&[0.001, 0.001, 0.001], 32);
        let path = path_through(&g);
        let request = request_with_chain(&[(2, 5.0e6)], &g);
        let plain = vec![VnfAllocation::base_only(2)];
        let replicated = vec![VnfAllocation {
            base: 2,
            boost: 0,
            replicas: 3,
        }];
        assert_eq!(
            chain_delay_s(&path, &request, &plain, 1.0e9),
            chain_delay_s(&path, &request, &replicated, 1.0e9)
        );
    }

    #[test]
    fn configure_is_a_no_op_when_bounds_already_hold() {
        let g = single_path_graph(&[0.001, 0.001, 0.001], 32);
        let path = path_through(&g);
        let mut request = request_with_chain(&[(2, 2.0e6), (1, 2.0e6)], &g);
        request.reliability_bound = 0.5;
        request.delay_bound_s = 1.0;
        let allocs = configure_vnfs(&request, &path, &ConstraintConfig::default()).unwrap();
        assert!(allocs.iter().all(|a| a.boost == 0 && a.replicas == 0));
    }

    #[test]
    fn single_replica_reaches_the_boundary_exactly() {
        let g = single_path_graph(&[0.001, 0.001, 0.001], 32);
        let path = path_through(&g);
        let mut request = request_with_chain(&[(2, 1.0e6)], &g);
        request.replica_flags = vec![true];
        request.reliability_bound = 0.99;
        request.delay_bound_s = 1.0;
        let cfg = ConstraintConfig {
            vnf_availability: 0.9,
            ..ConstraintConfig::default()
        };
        let allocs = configure_vnfs(&request, &path, &cfg).unwrap();
        assert_eq!(allocs[0].replicas, 1);
        assert!(chain_availability(&allocs, 0.9) >= 0.99);
    }

    #[test]
    fn replicas_cycle_over_eligible_vnfs() {
        let g = single_path_graph(&[0.001, 0.001, 0.001], 32);
        let path = path_through(&g);
        let mut request = request_with_chain(&[(1, 1.0e6), (1, 1.0e6), (1, 1.0e6)], &g);
        request.replica_flags = vec![true, false, true];
        request.reliability_bound = 0.9999;
        request.delay_bound_s = 1.0;
        let cfg = ConstraintConfig {
            vnf_availability: 0.99,
            ..ConstraintConfig::default()
        };
        // One pass cannot satisfy the bound: the flagless middle VNF pins
        // availability at 0.99 · ... until replicas stack on VNFs 0 and 2.
        let allocs = configure_vnfs(&request, &path, &cfg);
        assert!(allocs.is_none(), "0.99 cap from the flagless VNF is unreachable");

        request.reliability_bound = 0.985;
        let allocs = configure_vnfs(&request, &path, &cfg).unwrap();
        assert_eq!(
            allocs.iter().map(|a| a.replicas).collect::<Vec<_>>(),
            vec![1, 0, 1]
        );
    }

    #[test]
    fn boost_resolves_delay_deficit() {
        let g = single_path_graph(&[0.001, 0.001, 0.001], 32);
        let path = path_through(&g);
        let mut request = request_with_chain(&[(1, 8.0e6), (1, 8.0e6)], &g);
        request.boost_flags = vec![true, true];
        request.reliability_bound = 0.5;
        request.delay_bound_s = 0.012;
        let allocs = configure_vnfs(&request, &path, &ConstraintConfig::default()).unwrap();
        let delay = chain_delay_s(&path, &request, &allocs, 1.0e9);
        assert!(delay <= 0.012);
        assert!(allocs.iter().any(|a| a.boost > 0));
    }

    #[test]
    fn unreachable_delay_with_no_eligible_vnf_is_infeasible() {
        let g = single_path_graph(&[0.001, 0.001, 0.001], 32);
        let path = path_through(&g);
        let mut request = request_with_chain(&[(1, 9.0e6)], &g);
        request.boost_flags = vec![false];
        request.reliability_bound = 0.5;
        request.delay_bound_s = 0.004;
        assert_eq!(
            configure_vnfs(&request, &path, &ConstraintConfig::default()),
            None
        );
    }

    #[test]
    fn budget_cap_bounds_the_loop() {
        let g = single_path_graph(&[0.001, 0.001, 0.001], 32);
        let path = path_through(&g);
        let mut request = request_with_chain(&[(1, 1.0e7)], &g);
        request.boost_flags = vec![true];
        request.reliability_bound = 0.5;
        request.delay_bound_s = 0.0031;
        // Needs w/((1+boost)·τ) ≤ 0.1 ms, i.e. boost ≥ 99, far over the cap.
        assert_eq!(
            configure_vnfs(&request, &path, &ConstraintConfig::default()),
            None
        );
    }

    #[test]
    fn reward_matches_hand_values() {
        let g = single_path_graph(&[0.001, 0.001, 0.001], 32);
        let mut request = request_with_chain(&[(2, 1.0e6), (2, 1.0e6), (2, 1.0e6)], &g);
        request.bandwidth = crate::types::Bandwidth::from_gbps(0.5);
        request.departure = request.arrival + 10;
        let allocs = vec![
            VnfAllocation {
                base: 2,
                boost: 1,
                replicas: 0,
            },
            VnfAllocation {
                base: 2,
                boost: 0,
                replicas: 1,
            },
            VnfAllocation::base_only(2),
        ];
        // base 6, extra 2, efficiency 0.75: 0.5 · 6 · 10 · 0.75 = 22.5.
        assert!((compute_reward(&request, &allocs) - 22.5).abs() < 1e-12);

        let plain = vec![
            VnfAllocation::base_only(2),
            VnfAllocation::base_only(2),
            VnfAllocation::base_only(2),
        ];
        assert_eq!(compute_reward(&request, &plain), 0.5 * 6.0 * 10.0);
    }

    #[test]
    fn boost_monotonically_reduces_delay_and_replicas_raise_availability() {
        let g = single_path_graph(&[0.002, 0.002, 0.002], 32);
        let path = path_through(&g);
        let request = request_with_chain(&[(1, 5.0e6), (2, 5.0e6)], &g);
        let mut allocs = vec![VnfAllocation::base_only(1), VnfAllocation::base_only(2)];
        let mut last_delay = chain_delay_s(&path, &request, &allocs, 1.0e9);
        let mut last_avail = chain_availability(&allocs, 0.95);
        for k in 0..6 {
            allocs[k % 2].boost += 1;
            let delay = chain_delay_s(&path, &request, &allocs, 1.0e9);
            assert!(delay <= last_delay);
            last_delay = delay;

            allocs[k % 2].replicas += 1;
            let avail = chain_availability(&allocs, 0.95);
            assert!(avail >= last_avail);
            last_avail = avail;
        }
    }
}

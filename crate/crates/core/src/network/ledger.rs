use std::collections::{BTreeMap, BTreeSet};

use crate::feasibility::Deployment;
use crate::network::graph::NetworkGraph;
use crate::network::NetworkError;
use crate::types::{Bandwidth, LinkId, NodeId, SfcId, TimeSlot};
use crate::workload::SfcRequest;

/// Resources held by one accepted request until its departure slot.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Reservation {
    pub sfc: SfcId,
    pub expires: TimeSlot,
    /// Cores held per node, aggregated over the VNFs placed there.
    pub cores: Vec<(NodeId, u32)>,
    /// Bandwidth held per link of the path.
    pub bandwidth: Vec<(LinkId, Bandwidth)>,
}

/// Append-only record of ledger mutations, replayed by the post-run audit.
#[derive(Clone, Debug)]
pub enum LedgerEvent {
    Reserve {
        time: TimeSlot,
        reservation: Reservation,
    },
    Release {
        time: TimeSlot,
        sfc: SfcId,
    },
}

/// Tracks residual cores and bandwidth over simulation time.
///
/// All quantities are integral, so releasing a reservation restores the
/// residuals exactly. Expirations are keyed by (slot, id) and processed in
/// that order, which keeps runs deterministic.
#[derive(Clone, Debug)]
pub struct ResourceLedger {
    now: TimeSlot,
    installed_cores: Vec<u32>,
    link_capacity: Vec<Bandwidth>,
    residual_cores: Vec<u32>,
    residual_bandwidth: Vec<Bandwidth>,
    active: BTreeMap<SfcId, Reservation>,
    expirations: BTreeSet<(TimeSlot, SfcId)>,
    events: Vec<LedgerEvent>,
}

impl ResourceLedger {
    pub fn new(graph: &NetworkGraph) -> ResourceLedger {
        let installed_cores: Vec<u32> = graph.nodes().map(|(_, n)| n.cores).collect();
        let link_capacity: Vec<Bandwidth> = graph.links().map(|(_, l)| l.capacity).collect();
        ResourceLedger {
            now: 0,
            residual_cores: installed_cores.clone(),
            residual_bandwidth: link_capacity.clone(),
            installed_cores,
            link_capacity,
            active: BTreeMap::new(),
            expirations: BTreeSet::new(),
            events: Vec::new(),
        }
    }

    pub fn now(&self) -> TimeSlot {
        self.now
    }

    pub fn residual_cores(&self, n: NodeId) -> u32 {
        self.residual_cores[n.0]
    }

    pub fn residual_bandwidth(&self, l: LinkId) -> Bandwidth {
        self.residual_bandwidth[l.0]
    }

    pub fn installed_cores(&self, n: NodeId) -> u32 {
        self.installed_cores[n.0]
    }

    pub fn link_capacity(&self, l: LinkId) -> Bandwidth {
        self.link_capacity[l.0]
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn is_active(&self, sfc: SfcId) -> bool {
        self.active.contains_key(&sfc)
    }

    /// True when no reservation is held and every residual equals capacity.
    pub fn is_pristine(&self) -> bool {
        self.active.is_empty()
            && self.residual_cores == self.installed_cores
            && self.residual_bandwidth == self.link_capacity
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    /// Holds the deployment's cores and bandwidth until the request departs.
    ///
    /// A `Capacity` error here signals an upstream bug: callers must have
    /// verified feasibility against this ledger first.
    pub fn reserve(
        &mut self,
        request: &SfcRequest,
        deployment: &Deployment,
    ) -> Result<(), NetworkError> {
        if self.active.contains_key(&request.id) {
            return Err(NetworkError::DuplicateReservation(request.id));
        }
        if request.arrival != self.now {
            return Err(NetworkError::Misuse(format!(
                "{} arrives at slot {} but the ledger is at slot {}",
                request.id, request.arrival, self.now
            )));
        }
        if request.departure <= self.now {
            return Err(NetworkError::Misuse(format!(
                "{} would depart at slot {} which is not in the future",
                request.id, request.departure
            )));
        }

        let cores: Vec<(NodeId, u32)> = deployment.cores_by_node().into_iter().collect();
        let mut bandwidth: BTreeMap<LinkId, Bandwidth> = BTreeMap::new();
        for link in &deployment.path.links {
            let held = bandwidth.entry(*link).or_insert(Bandwidth::ZERO);
            *held = *held + request.bandwidth;
        }
        let bandwidth: Vec<(LinkId, Bandwidth)> = bandwidth.into_iter().collect();

        for (node, demand) in &cores {
            if *demand > self.residual_cores[node.0] {
                return Err(NetworkError::Capacity(format!(
                    "{} needs {demand} cores on node {} but only {} remain",
                    request.id, node.0, self.residual_cores[node.0]
                )));
            }
        }
        for (link, demand) in &bandwidth {
            if self.residual_bandwidth[link.0].checked_sub(*demand).is_none() {
                return Err(NetworkError::Capacity(format!(
                    "{} needs {demand} on link {} but only {} remain",
                    request.id, link.0, self.residual_bandwidth[link.0]
                )));
            }
        }

        for (node, demand) in &cores {
            self.residual_cores[node.0] -= demand;
        }
        for (link, demand) in &bandwidth {
            self.residual_bandwidth[link.0] =
                self.residual_bandwidth[link.0].checked_sub(*demand).unwrap();
        }

        let reservation = Reservation {
            sfc: request.id,
            expires: request.departure,
            cores,
            bandwidth,
        };
        self.expirations.insert((reservation.expires, request.id));
        self.events.push(LedgerEvent::Reserve {
            time: self.now,
            reservation: reservation.clone(),
        });
        self.active.insert(request.id, reservation);
        Ok(())
    }

    /// Returns an active reservation's resources to the pool.
    pub fn release(&mut self, sfc: SfcId) -> Result<(), NetworkError> {
        let reservation = self
            .active
            .remove(&sfc)
            .ok_or(NetworkError::UnknownReservation(sfc))?;
        for (node, held) in &reservation.cores {
            let restored = self.residual_cores[node.0] + held;
            if restored > self.installed_cores[node.0] {
                return Err(NetworkError::Capacity(format!(
                    "releasing {sfc} would overfill node {}",
                    node.0
                )));
            }
            self.residual_cores[node.0] = restored;
        }
        for (link, held) in &reservation.bandwidth {
            let restored = self.residual_bandwidth[link.0] + *held;
            if restored > self.link_capacity[link.0] {
                return Err(NetworkError::Capacity(format!(
                    "releasing {sfc} would overfill link {}",
                    link.0
                )));
            }
            self.residual_bandwidth[link.0] = restored;
        }
        self.expirations.remove(&(reservation.expires, sfc));
        self.events.push(LedgerEvent::Release {
            time: self.now,
            sfc,
        });
        Ok(())
    }

    /// Moves time forward to `t`, releasing every reservation that expires
    /// at or before `t`. Each release is logged at its expiration slot, so
    /// within a slot departures precede that slot's arrivals.
    pub fn advance_to(&mut self, t: TimeSlot) -> Result<(), NetworkError> {
        if t < self.now {
            return Err(NetworkError::Misuse(format!(
                "time cannot move backwards ({} -> {t})",
                self.now
            )));
        }
        while let Some(&(expires, sfc)) = self.expirations.iter().next() {
            if expires > t {
                break;
            }
            self.now = expires;
            self.release(sfc)?;
        }
        self.now = t;
        Ok(())
    }

    /// Advances past the last expiration so every reservation is released.
    pub fn drain(&mut self) -> Result<TimeSlot, NetworkError> {
        let last = self
            .expirations
            .iter()
            .next_back()
            .map(|(t, _)| *t)
            .unwrap_or(self.now);
        self.advance_to(last.max(self.now))?;
        Ok(self.now)
    }
}

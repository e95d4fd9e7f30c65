use std::time::Duration;

use super::config::ProtocolConfig;
use crate::error::Result;
use crate::secagg::{ClientOps, Party, Transcript};
use crate::stats::least_squares;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseTimings {
    pub key_exchange: Duration,
    pub round1: Duration,
    pub broadcast: Duration,
    /// Mean wall-clock encoding time per client.
    pub encode: Duration,
    pub aggregate: Duration,
    pub decode: Duration,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClientCost {
    pub bytes_sent: usize,
    pub bytes_received: usize,
    pub messages_sent: usize,
    pub messages_received: usize,
    pub ops: ClientOps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub clients: Vec<ClientCost>,
    /// Server traffic in both directions; relayed messages count twice.
    pub server_bytes: usize,
    pub timings: PhaseTimings,
    /// `"value"` or `"seed"`: how the projection was broadcast.
    pub broadcast_mode: &'static str,
}

impl CostReport {
    fn mean(&self, f: impl Fn(&ClientCost) -> usize) -> f64 {
        self.clients.iter().map(f).sum::<usize>() as f64 / self.clients.len() as f64
    }

    pub fn mean_bytes_sent(&self) -> f64 {
        self.mean(|c| c.bytes_sent)
    }

    pub fn mean_bytes_total(&self) -> f64 {
        self.mean(|c| c.bytes_sent + c.bytes_received)
    }

    pub fn mean_messages_sent(&self) -> f64 {
        self.mean(|c| c.messages_sent)
    }
}

/// Per-client and server totals, read off the transcript.
pub fn cost_report(transcript: &Transcript, ops: &[ClientOps], timings: PhaseTimings, config: &ProtocolConfig) -> CostReport {
    let clients = (0..config.n)
        .map(|i| {
            let p = Party::Client(i as u32);
            ClientCost {
                bytes_sent: transcript.bytes_sent(p),
                bytes_received: transcript.bytes_received(p),
                messages_sent: transcript.sent_by(p).count(),
                messages_received: transcript.received_by(p).count(),
                ops: ops.get(i).copied().unwrap_or_default(),
            }
        })
        .collect();
    CostReport {
        clients,
        server_bytes: transcript.server_bytes(),
        timings,
        broadcast_mode: if config.broadcast_by_seed { "seed" } else { "value" },
    }
}

/// Least-squares fit of `bytes = a + b*ell + c*(m_x + m_y) + d*k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostFit {
    pub intercept: f64,
    pub per_ell: f64,
    pub per_marginal: f64,
    pub per_neighbor: f64,
    pub r_squared: f64,
}

/// `points` holds `(ell, m_x + m_y, k, bytes)`.
pub fn fit_cost_model(points: &[(f64, f64, f64, f64)]) -> Result<CostFit> {
    let rows: Vec<Vec<f64>> = points.iter().map(|&(l, mm, k, _)| vec![1.0, l, mm, k]).collect();
    let y: Vec<f64> = points.iter().map(|p| p.3).collect();
    let fit = least_squares(&rows, &y)?;
    let c = &fit.coefficients;
    Ok(CostFit { intercept: c[0], per_ell: c[1], per_marginal: c[2], per_neighbor: c[3], r_squared: fit.r_squared })
}

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{MarginalMode, ProtocolConfig};
use super::cost::{cost_report, CostReport, PhaseTimings};
use crate::contingency::{build_u_vector, ContingencyTable, Marginals};
use crate::error::{Error, Result};
use crate::secagg::{aggregator, init_secure_agg, key_agreement, AggregationSetup, Aggregator, ClientOps, CommGraph, Envelope, FixedPointCodec, MessageBus, MessageKind, Party, Transcript};
use crate::sketch::{decode_gm, encode, sample_projection, ProjectionMatrix, SketchVector};

/// Everything the server holds after a run: aggregates and public values
/// only. There is deliberately no field that could carry a per-client table,
/// u-vector or sketch.
#[derive(Debug, Clone)]
pub struct ServerView {
    pub marginals: Marginals,
    pub projection: Arc<ProjectionMatrix>,
    pub aggregate_sketch: SketchVector,
    pub estimate: f64,
    pub transcript: Transcript,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub estimate: f64,
    pub view: ServerView,
    pub cost: CostReport,
}

/// One protocol session: graph, key exchange and message bus shared by the
/// aggregation rounds that follow.
pub struct Session {
    config: ProtocolConfig,
    setup: AggregationSetup,
    aggregator: Box<dyn Aggregator>,
    bus: MessageBus,
    ops: Vec<ClientOps>,
    timings: PhaseTimings,
    next_round: u64,
}

fn marginals_payload(m: &Marginals) -> Vec<u8> {
    std::iter::once(m.total).chain(m.row_sums.iter().copied()).chain(m.col_sums.iter().copied()).flat_map(i64::to_le_bytes).collect()
}

fn parse_marginals(bytes: &[u8], m_x: usize, m_y: usize) -> Result<Marginals> {
    if bytes.len() != 8 * (1 + m_x + m_y) {
        return Err(Error::protocol("marginals broadcast has the wrong length"));
    }
    let v: Vec<i64> = bytes.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect();
    let m = Marginals::new(v[1..=m_x].to_vec(), v[m_x + 1..].to_vec())?;
    if m.total != v[0] {
        return Err(Error::protocol("marginals broadcast has an inconsistent total"));
    }
    Ok(m)
}

impl Session {
    /// Validates `config`, samples the communication graph and runs the key
    /// exchange.
    pub fn open(config: &ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let start = Instant::now();
        let graph = if config.n == 1 { CommGraph::singleton() } else { init_secure_agg(config.n, config.seeds.graph)? };
        let ka = key_agreement(&config.key_agreement, config.seeds.key_agreement)?;
        let mut bus = MessageBus::new();
        let mut ops = vec![ClientOps::default(); config.n];
        let setup = AggregationSetup::establish(graph, ka.as_ref(), config.seeds.key_agreement, &mut bus, &mut ops)?;
        let timings = PhaseTimings { key_exchange: start.elapsed(), ..Default::default() };
        Ok(Self { config: config.clone(), setup, aggregator: aggregator(&config.aggregator)?, bus, ops, timings, next_round: 1 })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn graph(&self) -> &CommGraph {
        self.setup.graph()
    }

    /// Records full payloads from here on; see [`MessageBus::capture`].
    pub fn capture_traffic(&mut self) {
        self.bus.capture();
    }

    pub fn captured(&self) -> &[Envelope] {
        self.bus.captured()
    }

    pub fn transcript(&self) -> &Transcript {
        self.bus.transcript()
    }

    fn aggregate(&mut self, inputs: &[Vec<f64>], codec: FixedPointCodec) -> Result<Vec<f64>> {
        let round = self.next_round;
        self.next_round += 1;
        self.aggregator.aggregate(&self.setup, round, inputs, codec, &mut self.bus, &mut self.ops)
    }

    fn check_clients(&self, clients: &[ContingencyTable]) -> Result<()> {
        if clients.len() != self.config.n {
            return Err(Error::protocol(format!("configured for {} clients but {} tables were given", self.config.n, clients.len())));
        }
        if let Some(t) = clients.iter().find(|t| t.rows() != self.config.m_x || t.cols() != self.config.m_y) {
            return Err(Error::domain(format!("client table is {}x{}, expected {}x{}", t.rows(), t.cols(), self.config.m_x, self.config.m_y)));
        }
        Ok(())
    }

    /// Round 1: securely sums the row and column counts, checks that no
    /// marginal is zero, and broadcasts them. Returns the marginals as
    /// received by the clients.
    pub fn run_round1(&mut self, clients: &[ContingencyTable]) -> Result<Marginals> {
        self.check_clients(clients)?;
        let start = Instant::now();
        let codec = FixedPointCodec::integer();
        let locals: Vec<Marginals> = clients.iter().map(ContingencyTable::marginals).collect();
        let (rows, cols) = match self.config.marginal_mode {
            MarginalMode::Batched => {
                let rows = self.aggregate(&locals.iter().map(|m| m.row_sums.iter().map(|&v| v as f64).collect()).collect::<Vec<_>>(), codec)?;
                let cols = self.aggregate(&locals.iter().map(|m| m.col_sums.iter().map(|&v| v as f64).collect()).collect::<Vec<_>>(), codec)?;
                (rows, cols)
            }
            MarginalMode::PerCoordinate => {
                let mut rows = Vec::with_capacity(self.config.m_x);
                for x in 0..self.config.m_x {
                    rows.push(self.aggregate(&locals.iter().map(|m| vec![m.row_sums[x] as f64]).collect::<Vec<_>>(), codec)?[0]);
                }
                let mut cols = Vec::with_capacity(self.config.m_y);
                for y in 0..self.config.m_y {
                    cols.push(self.aggregate(&locals.iter().map(|m| vec![m.col_sums[y] as f64]).collect::<Vec<_>>(), codec)?[0]);
                }
                (rows, cols)
            }
        };
        let to_int = |v: Vec<f64>| v.into_iter().map(|x| x.round() as i64).collect::<Vec<_>>();
        let global = Marginals::new(to_int(rows), to_int(cols))?;
        global.require_positive()?;

        let round = self.next_round - 1;
        let payload = marginals_payload(&global);
        let mut received = None;
        for i in 0..self.config.n {
            let client = Party::Client(i as u32);
            self.bus.send(Envelope { round, sender: Party::Server, receiver: client, kind: MessageKind::Marginals, payload: payload.clone() });
            let env = self.bus.recv(client).ok_or_else(|| Error::protocol("marginals broadcast lost"))?;
            let m = parse_marginals(&env.payload, self.config.m_x, self.config.m_y)?;
            if received.as_ref().is_some_and(|r| r != &m) {
                return Err(Error::protocol("clients received different marginals"));
            }
            received = Some(m);
        }
        self.timings.round1 += start.elapsed();
        received.ok_or_else(|| Error::protocol("no clients"))
    }

    /// Round 2: projection broadcast, local encoding, secure sum of the
    /// sketches and geometric-mean decoding on the server.
    pub fn run_round2(&mut self, clients: &[ContingencyTable], marginals: &Marginals) -> Result<(f64, Arc<ProjectionMatrix>, SketchVector)> {
        self.check_clients(clients)?;
        let (ell, m, n) = (self.config.ell, self.config.m(), self.config.n);
        let round = self.next_round;

        let start = Instant::now();
        let server_p = sample_projection(ell, m, self.config.seeds.projection)?;
        let (kind, payload) = if self.config.broadcast_by_seed {
            (MessageKind::ProjectionSeed, self.config.seeds.projection.to_le_bytes().to_vec())
        } else {
            (MessageKind::Projection, server_p.to_bytes())
        };
        // Every client materialises the same matrix from an identical
        // payload, so the simulation materialises it once and has the
        // remaining clients check their payload against the first.
        let mut client_p: Option<Arc<ProjectionMatrix>> = None;
        for i in 0..n {
            let client = Party::Client(i as u32);
            self.bus.send(Envelope { round, sender: Party::Server, receiver: client, kind, payload: payload.clone() });
            let env = self.bus.recv(client).ok_or_else(|| Error::protocol("projection broadcast lost"))?;
            if env.payload != payload {
                return Err(Error::protocol("projection broadcast corrupted"));
            }
            if client_p.is_none() {
                let p = match kind {
                    MessageKind::ProjectionSeed => sample_projection(ell, m, u64::from_le_bytes(env.payload[..8].try_into().unwrap()))?,
                    _ => ProjectionMatrix::from_bytes(ell, m, self.config.seeds.projection, &env.payload)?,
                };
                client_p = Some(Arc::new(p));
            }
        }
        let client_p = client_p.ok_or_else(|| Error::protocol("no clients"))?;
        self.timings.broadcast += start.elapsed();

        let start = Instant::now();
        let sketches = clients
            .par_iter()
            .map(|t| encode(&client_p, &build_u_vector(t, marginals, n)?).map(SketchVector::into_inner))
            .collect::<Result<Vec<_>>>()?;
        for ops in &mut self.ops {
            ops.encode_mults += (ell * m) as u64;
        }
        self.timings.encode += start.elapsed() / n as u32;

        let start = Instant::now();
        let codec = FixedPointCodec::new(self.config.scale_bits)?;
        let sum = self.aggregate(&sketches, codec)?;
        self.timings.aggregate += start.elapsed();

        let start = Instant::now();
        let aggregate = SketchVector::new(sum);
        let estimate = decode_gm(&aggregate);
        self.timings.decode += start.elapsed();
        Ok((estimate, Arc::new(server_p), aggregate))
    }

    pub fn timings(&self) -> PhaseTimings {
        self.timings
    }

    pub fn ops(&self) -> &[ClientOps] {
        &self.ops
    }

    pub fn into_parts(self) -> (Transcript, Vec<ClientOps>, PhaseTimings) {
        (self.bus.into_transcript(), self.ops, self.timings)
    }
}

/// Runs the whole protocol on per-client tables.
pub fn fed_chi2(clients: &[ContingencyTable], config: &ProtocolConfig) -> Result<RunOutcome> {
    let mut session = Session::open(config)?;
    let marginals = session.run_round1(clients)?;
    let (estimate, projection, aggregate_sketch) = session.run_round2(clients, &marginals)?;
    let (transcript, ops, timings) = session.into_parts();
    let cost = cost_report(&transcript, &ops, timings, config);
    Ok(RunOutcome { estimate, view: ServerView { marginals, projection, aggregate_sketch, estimate, transcript }, cost })
}

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::codec::{FieldVector, FixedPointCodec};
use super::graph::CommGraph;
use super::ka::{KeyAgreement, PublicKey, SharedSeed};
use super::prg::expand_mask;
use super::transcript::{MessageKind, Party, Transcript};
use super::transport::{Envelope, MessageBus};
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::seed::derive;

/// Round id reserved for the key exchange.
pub const KEY_EXCHANGE_ROUND: u64 = 0;

/// Per-client operation counts, the units of the client computation cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClientOps {
    pub key_agreements: u64,
    /// 64-bit words drawn from the PRG.
    pub prg_words: u64,
    /// Wrapping additions/subtractions applying masks.
    pub field_ops: u64,
    /// Multiply-adds spent on the projection.
    pub encode_mults: u64,
}

impl ClientOps {
    pub fn add(&mut self, other: &ClientOps) {
        self.key_agreements += other.key_agreements;
        self.prg_words += other.prg_words;
        self.field_ops += other.field_ops;
        self.encode_mults += other.encode_mults;
    }
}

/// The outcome of the key exchange: each client's shared seed with each of
/// its neighbours. Established once per session; every aggregation then
/// draws its masks from a distinct PRG stream (the round id).
#[derive(Debug, Clone)]
pub struct AggregationSetup {
    graph: CommGraph,
    edge_seeds: Vec<Vec<(usize, SharedSeed)>>,
}

impl AggregationSetup {
    /// Runs the key exchange over `bus`: each client generates a key pair and
    /// sends its public key to every neighbour through the server, then
    /// derives one seed per neighbour from the keys it received.
    pub fn establish(graph: CommGraph, ka: &dyn KeyAgreement, seed: u64, bus: &mut MessageBus, ops: &mut [ClientOps]) -> Result<Self> {
        let n = graph.n();
        check_ops(ops, n)?;
        let keys: Vec<_> = (0..n)
            .map(|i| ka.generate(i, &mut ChaCha20Rng::seed_from_u64(derive(seed, &[i as u64]))))
            .collect();
        for (i, pair) in keys.iter().enumerate() {
            for &j in graph.neighbors(i) {
                bus.send(Envelope {
                    round: KEY_EXCHANGE_ROUND,
                    sender: Party::Client(i as u32),
                    receiver: Party::Client(j as u32),
                    kind: MessageKind::PublicKey,
                    payload: pair.public.0.clone(),
                });
            }
        }
        let mut edge_seeds = Vec::with_capacity(n);
        for (j, pair) in keys.iter().enumerate() {
            let mut seeds = Vec::new();
            for env in bus.drain(Party::Client(j as u32)) {
                let Party::Client(i) = env.sender else {
                    return Err(Error::protocol(format!("client {j} got a key from the server")));
                };
                seeds.push((i as usize, ka.agree(&pair.secret, &PublicKey(env.payload))?));
                ops[j].key_agreements += 1;
            }
            seeds.sort_by_key(|(i, _)| *i);
            let got: Vec<usize> = seeds.iter().map(|(i, _)| *i).collect();
            if got != graph.neighbors(j) {
                return Err(Error::protocol(format!("client {j} is missing public keys from its neighbours")));
            }
            edge_seeds.push(seeds);
        }
        Ok(Self { graph, edge_seeds })
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// `y_i = x_i + sum_{j > i} m_ij - sum_{j < i} m_ij` with the masks of
    /// PRG stream `round`.
    pub fn mask_input(&self, client: usize, round: u64, x: &FieldVector, ops: &mut ClientOps) -> FieldVector {
        let mut y = x.clone();
        for &(j, seed) in &self.edge_seeds[client] {
            let mask = expand_mask(&seed, round, x.len());
            if client < j {
                y.add_assign(&mask);
            } else {
                y.sub_assign(&mask);
            }
            ops.prg_words += x.len() as u64;
            ops.field_ops += x.len() as u64;
        }
        y
    }
}

fn check_ops(ops: &[ClientOps], n: usize) -> Result<()> {
    if ops.len() != n {
        return Err(Error::domain(format!("{} op counters for {n} clients", ops.len())));
    }
    Ok(())
}

fn check_inputs<T>(inputs: &[Vec<T>], n: usize) -> Result<usize> {
    if inputs.len() != n {
        return Err(Error::protocol(format!("expected {n} inputs, got {}", inputs.len())));
    }
    let len = inputs.first().map_or(0, Vec::len);
    if inputs.iter().any(|v| v.len() != len) {
        return Err(Error::domain("inputs differ in length"));
    }
    Ok(len)
}

/// Collects exactly one upload per client from the server's inbox.
fn collect_uploads(bus: &mut MessageBus, round: u64, n: usize) -> Result<Vec<Vec<u8>>> {
    let mut uploads: Vec<Option<Vec<u8>>> = vec![None; n];
    for env in bus.drain(Party::Server) {
        match env.sender {
            Party::Client(i) if env.round == round && env.kind == MessageKind::MaskedInput && (i as usize) < n => {
                if uploads[i as usize].replace(env.payload).is_some() {
                    return Err(Error::protocol(format!("client {i} uploaded twice in round {round}")));
                }
            }
            other => return Err(Error::protocol(format!("unexpected message from {other} in round {round}"))),
        }
    }
    uploads
        .into_iter()
        .enumerate()
        .map(|(i, u)| u.ok_or_else(|| Error::protocol(format!("client {i} dropped out of round {round}"))))
        .collect()
}

/// A strategy for summing one real vector per client.
pub trait Aggregator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Sums `inputs[i]` over all clients, recording traffic on `bus`.
    fn aggregate(
        &self,
        setup: &AggregationSetup,
        round: u64,
        inputs: &[Vec<f64>],
        codec: FixedPointCodec,
        bus: &mut MessageBus,
        ops: &mut [ClientOps],
    ) -> Result<Vec<f64>>;
}

/// Pairwise-masked aggregation in `Z_{2^64}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SecureAggregator;

impl SecureAggregator {
    /// Masks each client's encoded input, uploads it, and returns the
    /// server's wrapping sum of the uploads.
    pub fn aggregate_field(&self, setup: &AggregationSetup, round: u64, encoded: &[FieldVector], bus: &mut MessageBus, ops: &mut [ClientOps]) -> Result<FieldVector> {
        let n = setup.n();
        check_ops(ops, n)?;
        if round == KEY_EXCHANGE_ROUND {
            return Err(Error::protocol("round 0 is reserved for key exchange"));
        }
        if encoded.len() != n {
            return Err(Error::protocol(format!("expected {n} inputs, got {}", encoded.len())));
        }
        let len = encoded.first().map_or(0, FieldVector::len);
        if encoded.iter().any(|v| v.len() != len) {
            return Err(Error::domain("inputs differ in length"));
        }
        let masked: Vec<(FieldVector, ClientOps)> = encoded
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mut local = ClientOps::default();
                let y = setup.mask_input(i, round, x, &mut local);
                (y, local)
            })
            .collect();
        for (i, (y, local)) in masked.into_iter().enumerate() {
            ops[i].add(&local);
            bus.send(Envelope { round, sender: Party::Client(i as u32), receiver: Party::Server, kind: MessageKind::MaskedInput, payload: y.to_bytes() });
        }
        let mut sum = FieldVector::zeros(len);
        for payload in collect_uploads(bus, round, n)? {
            let y = FieldVector::from_bytes(&payload)?;
            if y.len() != len {
                return Err(Error::protocol("upload has the wrong length"));
            }
            sum.add_assign(&y);
        }
        Ok(sum)
    }
}

impl Aggregator for SecureAggregator {
    fn name(&self) -> &'static str {
        "secure"
    }

    fn aggregate(&self, setup: &AggregationSetup, round: u64, inputs: &[Vec<f64>], codec: FixedPointCodec, bus: &mut MessageBus, ops: &mut [ClientOps]) -> Result<Vec<f64>> {
        check_inputs(inputs, setup.n())?;
        let encoded = inputs.iter().map(|x| codec.encode(x, inputs.len())).collect::<Result<Vec<_>>>()?;
        let sum = self.aggregate_field(setup, round, &encoded, bus, ops)?;
        Ok(codec.decode(&sum))
    }
}

/// Oracle mode: clients upload raw `f64` vectors and the server adds them in
/// client order. No masking and no quantization; for testing only.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlainAggregator;

impl Aggregator for PlainAggregator {
    fn name(&self) -> &'static str {
        "plain"
    }

    fn aggregate(&self, setup: &AggregationSetup, round: u64, inputs: &[Vec<f64>], _codec: FixedPointCodec, bus: &mut MessageBus, ops: &mut [ClientOps]) -> Result<Vec<f64>> {
        let n = setup.n();
        check_ops(ops, n)?;
        let len = check_inputs(inputs, n)?;
        for (i, x) in inputs.iter().enumerate() {
            let payload = x.iter().flat_map(|v| v.to_le_bytes()).collect();
            bus.send(Envelope { round, sender: Party::Client(i as u32), receiver: Party::Server, kind: MessageKind::MaskedInput, payload });
        }
        let mut sum = vec![0.0; len];
        for payload in collect_uploads(bus, round, n)? {
            for (s, c) in sum.iter_mut().zip(payload.chunks_exact(8)) {
                *s += f64::from_le_bytes(c.try_into().unwrap());
            }
        }
        Ok(sum)
    }
}

type AggregatorFactory = dyn Fn() -> Box<dyn Aggregator> + Send + Sync;

pub fn aggregators() -> Registry<AggregatorFactory> {
    let mut reg: Registry<AggregatorFactory> = Registry::new("aggregator");
    reg.register("secure", Box::new(|| Box::new(SecureAggregator) as Box<dyn Aggregator>));
    reg.register("plain", Box::new(|| Box::new(PlainAggregator) as Box<dyn Aggregator>));
    reg
}

pub fn aggregator(name: &str) -> Result<Box<dyn Aggregator>> {
    Ok(aggregators().get(name)?())
}

/// A self-contained masked aggregation: key exchange followed by one masked
/// upload per client. Returns the decoded sum and the full transcript.
pub fn secure_agg_round(inputs: &[Vec<f64>], graph: &CommGraph, codec: FixedPointCodec, ka: &dyn KeyAgreement, seed: u64) -> Result<(Vec<f64>, Transcript)> {
    if inputs.len() != graph.n() {
        return Err(Error::protocol(format!("graph has {} clients but {} inputs were given", graph.n(), inputs.len())));
    }
    let mut bus = MessageBus::new();
    let mut ops = vec![ClientOps::default(); graph.n()];
    let setup = AggregationSetup::establish(graph.clone(), ka, seed, &mut bus, &mut ops)?;
    let sum = SecureAggregator.aggregate(&setup, 1, inputs, codec, &mut bus, &mut ops)?;
    Ok((sum, bus.into_transcript()))
}

/// Sorted client ids that sent at least one message in `round`.
pub fn senders_in_round(t: &Transcript, round: u64) -> BTreeSet<Party> {
    t.messages().iter().filter(|m| m.round == round).map(|m| m.sender).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secagg::{init_secure_agg, TestKeyAgreement};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_inputs(n: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..len).map(|_| rng.random_range(-100.0..100.0)).collect()).collect()
    }

    #[test]
    fn opposite_inputs_cancel() {
        let g = init_secure_agg(2, 1).unwrap();
        let v: Vec<f64> = vec![1.25, -3.5, 1e3];
        let w: Vec<f64> = v.iter().map(|x| -x).collect();
        let (sum, _) = secure_agg_round(&[v, w], &g, FixedPointCodec::default(), &TestKeyAgreement::new(0), 0).unwrap();
        assert_eq!(sum, vec![0.0; 3]);
    }

    #[test]
    fn matches_plain_sum_within_quantization() {
        let g = init_secure_agg(10, 2).unwrap();
        let inputs = random_inputs(10, 20, 3);
        let codec = FixedPointCodec::default();
        let (sum, _) = secure_agg_round(&inputs, &g, codec, &TestKeyAgreement::new(4), 4).unwrap();
        for (c, s) in sum.iter().enumerate() {
            let truth: f64 = inputs.iter().map(|x| x[c]).sum();
            assert!((s - truth).abs() <= codec.quantization_bound(10) + 1e-12);
        }
    }

    #[test]
    fn masks_cancel_bit_exactly() {
        let codec = FixedPointCodec::default();
        for n in [2usize, 3, 10, 100] {
            let g = init_secure_agg(n, n as u64).unwrap();
            let mut bus = MessageBus::new();
            let mut ops = vec![ClientOps::default(); n];
            let setup = AggregationSetup::establish(g, &TestKeyAgreement::new(n as u64), 9, &mut bus, &mut ops).unwrap();
            for round in 1..=5 {
                let inputs = random_inputs(n, 12, round * 31 + n as u64);
                let encoded: Vec<_> = inputs.iter().map(|x| codec.encode(x, n).unwrap()).collect();
                let expected = FieldVector::sum(12, &encoded);
                let got = SecureAggregator.aggregate_field(&setup, round, &encoded, &mut bus, &mut ops).unwrap();
                assert_eq!(got, expected, "n = {n}, round = {round}");
            }
        }
    }

    #[test]
    fn uploads_are_masked_and_uniform() {
        // Fixed input, fresh keys each time: the top nibble of one coordinate
        // of client 0's upload should be uniform over 16 values.
        let g = init_secure_agg(3, 5).unwrap();
        let x = FixedPointCodec::default().encode(&[42.0], 3).unwrap();
        let mut counts = [0u32; 16];
        let trials = 10_000;
        for t in 0..trials {
            let mut bus = MessageBus::new();
            let mut ops = vec![ClientOps::default(); 3];
            let setup = AggregationSetup::establish(g.clone(), &TestKeyAgreement::new(t), 0, &mut bus, &mut ops).unwrap();
            let y = setup.mask_input(0, 1, &x, &mut ops[0]);
            counts[(y.residues()[0] >> 60) as usize] += 1;
        }
        let e = trials as f64 / 16.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 0.001 critical value of chi-square with 15 dof
        assert!(stat < 37.70, "{stat}");
    }

    #[test]
    fn message_count_per_client_is_degree_plus_one() {
        for n in [2usize, 7, 50] {
            let g = init_secure_agg(n, 11).unwrap();
            let (_, t) = secure_agg_round(&random_inputs(n, 4, 1), &g, FixedPointCodec::default(), &TestKeyAgreement::new(1), 1).unwrap();
            for i in 0..n {
                assert_eq!(t.sent_by(Party::Client(i as u32)).count(), g.neighbors(i).len() + 1);
            }
        }
    }

    #[test]
    fn plain_and_secure_agree() {
        let n = 6;
        let g = init_secure_agg(n, 1).unwrap();
        let inputs = random_inputs(n, 5, 2);
        let mut bus = MessageBus::new();
        let mut ops = vec![ClientOps::default(); n];
        let setup = AggregationSetup::establish(g, &TestKeyAgreement::new(0), 0, &mut bus, &mut ops).unwrap();
        let codec = FixedPointCodec::default();
        let a = aggregator("plain").unwrap().aggregate(&setup, 1, &inputs, codec, &mut bus, &mut ops).unwrap();
        let b = aggregator("secure").unwrap().aggregate(&setup, 2, &inputs, codec, &mut bus, &mut ops).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= codec.quantization_bound(n) + 1e-9);
        }
        assert!(aggregator("shamir").is_err());
    }

    #[test]
    fn wrong_input_count_aborts() {
        let g = init_secure_agg(4, 1).unwrap();
        assert!(secure_agg_round(&random_inputs(3, 2, 0), &g, FixedPointCodec::default(), &TestKeyAgreement::new(0), 0).is_err());
        let huge = vec![vec![1e15]; 4];
        assert!(matches!(
            secure_agg_round(&huge, &g, FixedPointCodec::default(), &TestKeyAgreement::new(0), 0),
            Err(Error::Overflow { .. })
        ));
    }
}

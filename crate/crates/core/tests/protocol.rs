use fedchi::contingency::{chi2_statistic, split_across_clients, synth_dataset, ContingencyTable, SynthKind, SynthRecipe};
use fedchi::protocol::{fed_chi2, MarginalMode, ProtocolConfig, Session};
use fedchi::secagg::{MessageKind, Party};
use fedchi::sketch::{decode_gm, encode, sample_projection};
use fedchi::contingency::{build_u_vector, UVector};
use fedchi::Error;

fn config(n: usize) -> ProtocolConfig {
    ProtocolConfig { n, key_agreement: "test".into(), ..ProtocolConfig::default() }
}

fn dataset(kind: SynthKind, seed: u64) -> ContingencyTable {
    synth_dataset(kind, 20, 20, 10_000, seed, &SynthRecipe::default()).unwrap()
}

#[test]
fn round1_marginals_match_merged_table() {
    let global = dataset(SynthKind::Quadratic, 1);
    for n in [1usize, 10] {
        let clients = split_across_clients(&global, n, 2);
        for mode in [MarginalMode::Batched, MarginalMode::PerCoordinate] {
            let cfg = ProtocolConfig { marginal_mode: mode, ..config(n) };
            let mut s = Session::open(&cfg).unwrap();
            assert_eq!(s.run_round1(&clients).unwrap(), global.marginals());
            let rounds = s.transcript().aggregation_rounds().len();
            match mode {
                MarginalMode::Batched => assert_eq!(rounds, 2),
                MarginalMode::PerCoordinate => assert_eq!(rounds, 40),
            }
        }
    }
}

#[test]
fn zero_marginal_aborts_round1() {
    let mut t = dataset(SynthKind::Independent, 3);
    for y in 0..20 {
        t.set(4, y, 0);
    }
    let clients = split_across_clients(&t, 3, 1);
    let err = fed_chi2(&clients, &config(3)).unwrap_err();
    assert!(matches!(err, Error::ZeroMarginal { index: 5, .. }), "{err}");
}

#[test]
fn plain_mode_commutes_with_encoding() {
    let global = dataset(SynthKind::Linear, 4);
    let clients = split_across_clients(&global, 10, 5);
    let cfg = ProtocolConfig { aggregator: "plain".into(), ..config(10) };
    let out = fed_chi2(&clients, &cfg).unwrap();
    let marg = global.marginals();
    let us: Vec<UVector> = clients.iter().map(|c| build_u_vector(c, &marg, 10).unwrap()).collect();
    let p = sample_projection(cfg.ell, 400, cfg.seeds.projection).unwrap();
    let direct = decode_gm(&encode(&p, &UVector::sum(&us).unwrap()).unwrap());
    assert!((out.estimate - direct).abs() <= 1e-10 * direct, "{} vs {direct}", out.estimate);
}

#[test]
fn secure_and_plain_estimates_agree_within_quantization() {
    let global = dataset(SynthKind::Logistic, 6);
    let clients = split_across_clients(&global, 10, 7);
    let a = fed_chi2(&clients, &config(10)).unwrap().estimate;
    let b = fed_chi2(&clients, &ProtocolConfig { aggregator: "plain".into(), ..config(10) }).unwrap().estimate;
    assert!((a - b).abs() <= 1e-6 * b);
}

#[test]
fn independent_table_is_not_flagged() {
    let global = synth_dataset(SynthKind::Independent, 20, 20, 200_000, 8, &SynthRecipe::default()).unwrap();
    let clients = split_across_clients(&global, 10, 9);
    let out = fed_chi2(&clients, &ProtocolConfig { ell: 200, ..config(10) }).unwrap();
    // 5% critical value of chi-square with 361 dof
    assert!(out.estimate < 406.3, "{}", out.estimate);
    let oracle = chi2_statistic(&global).unwrap();
    assert!((out.estimate / oracle - 1.0).abs() < 0.5);
}

#[test]
fn runs_are_bit_reproducible() {
    let global = dataset(SynthKind::Quadratic, 10);
    let clients = split_across_clients(&global, 7, 11);
    for ka in ["test", "x25519"] {
        let cfg = ProtocolConfig { key_agreement: ka.into(), ..config(7) };
        let a = fed_chi2(&clients, &cfg).unwrap();
        let b = fed_chi2(&clients, &cfg).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.view.transcript, b.view.transcript);
        assert_eq!(a.view.aggregate_sketch, b.view.aggregate_sketch);
    }
}

#[test]
fn uploads_look_random_and_message_counts_follow_the_graph() {
    let global = dataset(SynthKind::Linear, 12);
    let n = 20;
    let clients = split_across_clients(&global, n, 13);
    let cfg = config(n);
    let mut s = Session::open(&cfg).unwrap();
    s.capture_traffic();
    let marg = s.run_round1(&clients).unwrap();
    s.run_round2(&clients, &marg).unwrap();

    // Every upload, including the small integer marginals, should be
    // indistinguishable from uniform bytes.
    let mut counts = [0u64; 256];
    let mut total = 0u64;
    for env in s.captured().iter().filter(|e| e.kind == MessageKind::MaskedInput) {
        assert_eq!(env.receiver, Party::Server);
        for &b in &env.payload {
            counts[b as usize] += 1;
            total += 1;
        }
    }
    let e = total as f64 / 256.0;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    assert!(stat < 330.52, "byte histogram chi-square {stat} over {total} bytes");

    let degrees = s.graph().degrees();
    let (t, _, _) = s.into_parts();
    for i in 0..n {
        let p = Party::Client(i as u32);
        let uploads = t.sent_by(p).filter(|m| m.kind == MessageKind::MaskedInput).count();
        let keys = t.sent_by(p).filter(|m| m.kind == MessageKind::PublicKey).count();
        assert_eq!(uploads, 3);
        assert_eq!(keys, degrees[i]);
        assert_eq!(t.received_by(p).filter(|m| m.kind == MessageKind::Marginals || m.kind == MessageKind::Projection).count(), 2);
    }
}

#[test]
fn cost_report_totals_match_transcript() {
    let global = dataset(SynthKind::Linear, 14);
    let clients = split_across_clients(&global, 5, 15);
    for by_seed in [false, true] {
        let cfg = ProtocolConfig { broadcast_by_seed: by_seed, ..config(5) };
        let out = fed_chi2(&clients, &cfg).unwrap();
        let t = &out.view.transcript;
        let sent: usize = out.cost.clients.iter().map(|c| c.bytes_sent).sum();
        let recv: usize = out.cost.clients.iter().map(|c| c.bytes_received).sum();
        let client_sent: usize = t.messages().iter().filter(|m| m.sender != Party::Server).map(|m| m.bytes).sum();
        let client_recv: usize = t.messages().iter().filter(|m| m.receiver != Party::Server).map(|m| m.bytes).sum();
        assert_eq!(sent, client_sent);
        assert_eq!(recv, client_recv);
        let projection_bytes: usize = t.received_by(Party::Client(0)).filter(|m| matches!(m.kind, MessageKind::Projection | MessageKind::ProjectionSeed)).map(|m| m.bytes).sum();
        assert_eq!(projection_bytes, if by_seed { 8 } else { 8 * 50 * 400 });
        assert_eq!(out.cost.broadcast_mode, if by_seed { "seed" } else { "value" });
    }
}

#[test]
fn hiding_condition_is_enforced() {
    let small = ContingencyTable::zeros(4, 4).unwrap();
    let cfg = ProtocolConfig { m_x: 4, m_y: 4, ..config(1) };
    assert!(fed_chi2(&[small], &cfg).unwrap_err().is_config());
}

#[test]
fn single_client_matches_centralized_sketch() {
    let global = dataset(SynthKind::Quadratic, 16);
    let cfg = config(1);
    let out = fed_chi2(std::slice::from_ref(&global), &cfg).unwrap();
    let u = build_u_vector(&global, &global.marginals(), 1).unwrap();
    let p = sample_projection(cfg.ell, 400, cfg.seeds.projection).unwrap();
    let direct = decode_gm(&encode(&p, &u).unwrap());
    assert!((out.estimate - direct).abs() <= 1e-6 * direct);
}

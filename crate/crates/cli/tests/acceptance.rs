//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use ark_ff::{Field, One, PrimeField, UniformRand, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use pmp_core::dasnet::{
    effective_samples, required_samples, BlockHeader, ConfigMode, Experiment, ExperimentConfig, LightClient,
    SamplingPlan,
};
use pmp_core::grid::{build_grid, build_opened_group, partition_micro_domains, GridDims, GroupLayout};
use pmp_core::kzg::{commit, g1_mul, open_single, verify_single, OpCounters, Srs};
use pmp_core::multiproof::{
    open_generic, open_shared, open_shared_with, verify_shared, verify_shared_with, AggregatedProof, OpenedGroup,
};
use pmp_core::poly::{EvaluationDomain, MicroDomain, Polynomial, Scalar};
use pmp_core::storage_report;
use pmp_core::transcript::{derive_gamma, Challenge, Transcript};
use pmp_core::wire::{decode_mcell, encode_mcell, BaselineCell, GCellBlock, MCell};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("storage arithmetic", Some(Duration::from_secs(1)), storage_arithmetic),
        (
            "multiproof correctness",
            Some(Duration::from_secs(60)),
            multiproof_correctness,
        ),
        ("tamper soundness", Some(Duration::from_secs(120)), tamper_soundness),
        ("k = 1, g = 1 reduction", None, reduction_identity),
        ("operation accounting", None, operation_accounting),
        ("worked example", None, worked_example),
        ("wire byte-exactness", None, wire_exactness),
        ("sample accounting", None, sample_accounting),
        ("network trends", Some(Duration::from_secs(300)), network_trends),
        ("ablation determinism", None, ablation_determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({elapsed:.2?}): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn random_poly(r: &mut ChaCha20Rng, degree: usize) -> Polynomial {
    Polynomial::new((0..=degree).map(|_| Scalar::rand(r)).collect())
}

fn storage_arithmetic() -> Outcome {
    let r = storage_report(64, 4).map_err(|e| e.to_string())?;
    ensure!(r.baseline_total_bytes == 5120, "baseline {}", r.baseline_total_bytes);
    ensure!(r.grouped_object_bytes == 176, "object {}", r.grouped_object_bytes);
    ensure!(r.amortized_exact() == Some(44), "amortized {}", r.amortized_display());
    ensure!(r.grouped_total_bytes == 2816, "total {}", r.grouped_total_bytes);
    ensure!(r.grouped_object_count == 16, "objects {}", r.grouped_object_count);
    let one = storage_report(64, 1).map_err(|e| e.to_string())?;
    ensure!(
        one.grouped_total_bytes == 5120,
        "g = 1 total {}",
        one.grouped_total_bytes
    );
    Ok("5120 / 176 / 44 / 2816 / 16 objects; g = 1 gives 5120".into())
}

/// Evaluates everything at the known secret with field arithmetic only.
fn witness_oracle(
    tau: Scalar,
    polys: &[Polynomial],
    points: &[Scalar],
    values: &[Vec<Scalar>],
    gamma: Scalar,
) -> Scalar {
    let at = |p: &Polynomial, x: Scalar| p.coeffs().iter().rev().fold(Scalar::zero(), |acc, c| acc * x + c);
    let mut weight = Scalar::one();
    let mut f_tau = Scalar::zero();
    let mut combined = vec![Scalar::zero(); points.len()];
    for (p, vals) in polys.iter().zip(values) {
        f_tau += weight * at(p, tau);
        for (c, v) in combined.iter_mut().zip(vals) {
            *c += weight * v;
        }
        weight *= gamma;
    }
    // Lagrange form of the combined remainder at tau
    let mut r_tau = Scalar::zero();
    for (j, zj) in points.iter().enumerate() {
        let mut l = Scalar::one();
        for (m, zm) in points.iter().enumerate() {
            if m != j {
                l *= (tau - zm) * (*zj - zm).inverse().unwrap();
            }
        }
        r_tau += combined[j] * l;
    }
    let z_tau = points.iter().fold(Scalar::one(), |acc, z| acc * (tau - z));
    (f_tau - r_tau) * z_tau.inverse().unwrap()
}

fn multiproof_correctness() -> Outcome {
    let mut r = rng(2);
    let domain = EvaluationDomain::for_size(64).unwrap();
    let mut instances = 0;
    for k in [1usize, 2, 4, 8] {
        for g in [1usize, 4, 8, 16] {
            for _ in 0..7 {
                let d = r.gen_range(g.max(1)..=64);
                let tau = Scalar::rand(&mut r);
                let srs = Srs::gen(d, tau).unwrap();
                let polys: Vec<Polynomial> = (0..k)
                    .map(|_| {
                        let deg = r.gen_range(0..=d);
                        random_poly(&mut r, deg)
                    })
                    .collect();
                let offset = g * r.gen_range(0..64 / g);
                let md = MicroDomain::new(&domain, offset, g).unwrap();
                let values: Vec<Vec<Scalar>> = polys
                    .iter()
                    .map(|p| md.points().iter().map(|z| pmp_core::evaluate(p, z)).collect())
                    .collect();
                let commitments: Vec<_> = polys.iter().map(|p| commit(&srs, p).unwrap()).collect();
                let block = GCellBlock {
                    rows_start: 0,
                    rows_end: k as u32,
                    cols_start: offset as u32,
                    cols_end: (offset + g) as u32,
                };
                let gamma = derive_gamma(&Transcript::for_block(srs.id(), &commitments, &md, block));
                let proof = open_shared(&srs, &polys, &md, &gamma).unwrap();
                let group = OpenedGroup::new(commitments, values.clone(), md.clone()).unwrap();
                ensure!(
                    verify_shared(&srs, &group, &proof, &gamma).unwrap(),
                    "k={k} g={g} d={d} rejected"
                );
                let sets = vec![md.points().to_vec(); k];
                let generic = open_generic(&srs, &polys, &sets, &values, &gamma).unwrap();
                ensure!(generic == proof, "k={k} g={g} d={d}: generic witness differs");
                let h_tau = witness_oracle(tau, &polys, md.points(), &values, gamma.scalar());
                ensure!(g1_mul(&h_tau) == proof.0, "k={k} g={g} d={d}: oracle witness differs");
                instances += 1;
            }
        }
    }
    Ok(format!(
        "{instances} instances verified, equal to generic opening and oracle"
    ))
}

fn tamper_soundness() -> Outcome {
    let mut r = rng(3);
    let srs = Srs::gen(8, Scalar::rand(&mut r)).unwrap();
    let dims = GridDims::new(4, 8, 2).unwrap();
    let layout = GroupLayout::new(4, 2).unwrap();
    let data: Vec<u8> = (0..dims.capacity_bytes()).map(|_| r.gen()).collect();
    let grid = build_grid(&srs, &data, dims).unwrap();
    let header = BlockHeader::from_grid(&grid, layout);
    let client = LightClient::new(&srs, &header, 0).unwrap();

    struct Honest {
        id: pmp_core::grid::GroupId,
        group: OpenedGroup,
        transcript: Transcript,
        proof: AggregatedProof,
        bytes: Vec<u8>,
    }
    let honest: Vec<Honest> = layout
        .groups(&dims)
        .into_iter()
        .map(|id| {
            let block = layout.block(&dims, id);
            let md = MicroDomain::new(grid.row_domain(), block.cols_start as usize, 4).unwrap();
            let rows = block.rows_start..block.rows_end;
            let group = build_opened_group(&grid, rows.clone(), &md).unwrap();
            let transcript = Transcript::for_block(srs.id(), group.commitments(), &md, block);
            let polys = &grid.row_polys()[rows.start as usize..rows.end as usize];
            let proof = open_shared(&srs, polys, &md, &derive_gamma(&transcript)).unwrap();
            let bytes = encode_mcell(&MCell {
                proof: proof.to_bytes(),
                block,
                scalars: group.flat_values(),
            });
            Honest {
                id,
                group,
                transcript,
                proof,
                bytes,
            }
        })
        .collect();
    for h in &honest {
        ensure!(
            client.verify_group_object(ConfigMode::Pmp, h.id, &h.bytes, &mut OpCounters::default()),
            "honest group {} rejected",
            h.id
        );
    }

    let mut false_accepts = Vec::new();
    let trials = 1000;
    let mut ops = OpCounters::default();
    for t in 0..trials {
        let h = &honest[r.gen_range(0..honest.len())];
        let accepted = match t % 5 {
            // one stored scalar changed
            0 => {
                let mut m = decode_mcell(&h.bytes).unwrap();
                let i = r.gen_range(0..m.scalars.len());
                m.scalars[i] += Scalar::from(r.gen_range(1..u64::MAX));
                client.verify_group_object(ConfigMode::Pmp, h.id, &encode_mcell(&m), &mut ops)
            }
            // one proof bit flipped
            1 => {
                let mut bytes = h.bytes.clone();
                bytes[r.gen_range(0..48)] ^= 1 << r.gen_range(0..8);
                client.verify_group_object(ConfigMode::Pmp, h.id, &bytes, &mut ops)
            }
            // header commitments of the band swapped
            2 => {
                let mut swapped = header.clone();
                let b = layout.block(&dims, h.id);
                swapped
                    .commitments
                    .swap(b.rows_start as usize, b.rows_start as usize + 1);
                let c = LightClient::new(&srs, &swapped, 0).unwrap();
                c.verify_group_object(ConfigMode::Pmp, h.id, &h.bytes, &mut ops)
            }
            // block metadata bound into gamma changed
            3 => {
                let mut tr = h.transcript.clone();
                let delta = r.gen_range(1..4u32);
                match r.gen_range(0..4) {
                    0 => tr.block.rows_start += delta,
                    1 => tr.block.rows_end += delta,
                    2 => tr.block.cols_start += delta,
                    _ => tr.block.cols_end += delta,
                }
                verify_shared_with(&srs, &h.group, &h.proof, &derive_gamma(&tr), &mut ops).unwrap()
            }
            // some other transcript component changed
            _ => {
                let mut tr = h.transcript.clone();
                match r.gen_range(0..4) {
                    0 => tr.srs_id[r.gen_range(0..32)] ^= 1 << r.gen_range(0..8),
                    1 => {
                        let i = r.gen_range(0..tr.micro_domain.len());
                        tr.micro_domain[i] += Scalar::one();
                    }
                    2 => {
                        let i = r.gen_range(0..tr.coords.len());
                        tr.coords[i].1 += 1;
                    }
                    _ => {
                        let i = r.gen_range(0..tr.commitments.len());
                        let other = (h.transcript.block.rows_end as usize + i) % dims.rows as usize;
                        tr.commitments[i] = header.commitments[other];
                    }
                }
                verify_shared_with(&srs, &h.group, &h.proof, &derive_gamma(&tr), &mut ops).unwrap()
            }
        };
        if accepted {
            false_accepts.push(t);
        }
    }
    ensure!(false_accepts.is_empty(), "false accepts at trials {false_accepts:?}");
    Ok(format!("{trials} tamper trials over 5 categories, 0 false accepts"))
}

fn reduction_identity() -> Outcome {
    let mut r = rng(4);
    let srs = Srs::gen(16, Scalar::rand(&mut r)).unwrap();
    let mut agreements = 0;
    for i in 0..200 {
        let deg = r.gen_range(0..=16);
        let f = random_poly(&mut r, deg);
        let z = Scalar::rand(&mut r);
        let (v, proof) = open_single(&srs, &f, &z).unwrap();
        let mut cm = commit(&srs, &f).unwrap();
        let mut value = v;
        let mut proof = proof;
        let honest = i % 2 == 0;
        if !honest {
            match r.gen_range(0..3) {
                0 => value += Scalar::one(),
                1 => proof = open_single(&srs, &random_poly(&mut r, 5), &z).unwrap().1,
                _ => cm = commit(&srs, &random_poly(&mut r, 5)).unwrap(),
            }
        }
        let single = verify_single(&srs, &cm, &z, &value, &proof);
        let md = MicroDomain::from_points(vec![z], 0).unwrap();
        let group = OpenedGroup::new(vec![cm], vec![vec![value]], md.clone()).unwrap();
        let block = GCellBlock {
            rows_start: 0,
            rows_end: 1,
            cols_start: 0,
            cols_end: 1,
        };
        let gamma = derive_gamma(&Transcript::for_block(srs.id(), &[cm], &md, block));
        let multi = verify_shared(
            &srs,
            &group,
            &AggregatedProof::from_bytes(&proof.to_bytes()).unwrap(),
            &gamma,
        )
        .unwrap();
        ensure!(single == multi, "instance {i}: single {single}, multiproof {multi}");
        ensure!(
            single == honest,
            "instance {i}: decision {single} for honest = {honest}"
        );
        agreements += 1;
    }
    Ok(format!(
        "{agreements}/200 decisions identical (100 honest, 100 tampered)"
    ))
}

fn operation_accounting() -> Outcome {
    let mut r = rng(5);
    let domain = EvaluationDomain::for_size(64).unwrap();
    let mut checked = Vec::new();
    for (d, g, k) in [
        (32usize, 8usize, 5usize),
        (64, 16, 8),
        (16, 1, 1),
        (8, 8, 2),
        (40, 4, 3),
    ] {
        let srs = Srs::gen(d, Scalar::rand(&mut r)).unwrap();
        let polys: Vec<Polynomial> = (0..k).map(|_| random_poly(&mut r, d)).collect();
        let md = MicroDomain::new(&domain, g, g).unwrap();
        let gamma = Challenge::from_scalar(Scalar::rand(&mut r));
        let mut open_ops = OpCounters::default();
        let proof = open_shared_with(&srs, &polys, &md, &gamma, &mut open_ops).unwrap();
        let expect_open = OpCounters {
            g1_scalar_mults: (d + 1 - g) as u64,
            ..Default::default()
        };
        ensure!(open_ops == expect_open, "open d={d} g={g} k={k}: {open_ops:?}");
        let values = polys
            .iter()
            .map(|p| md.points().iter().map(|z| pmp_core::evaluate(p, z)).collect())
            .collect();
        let commitments = polys.iter().map(|p| commit(&srs, p).unwrap()).collect();
        let group = OpenedGroup::new(commitments, values, md.clone()).unwrap();
        for (label, g2) in [("cold", g as u64 + 1), ("warm", 0)] {
            let mut ops = OpCounters::default();
            ensure!(
                verify_shared_with(&srs, &group, &proof, &gamma, &mut ops).unwrap(),
                "{label} verify failed"
            );
            let expect = OpCounters {
                g1_scalar_mults: (k + g + 1) as u64,
                g2_scalar_mults: g2,
                pairings: 2,
                interpolations: 1,
            };
            ensure!(ops == expect, "{label} verify d={d} g={g} k={k}: {ops:?}");
        }
        checked.push(format!("(d={d},g={g},k={k})"));
    }
    Ok(format!("exact counts for {}", checked.join(" ")))
}

fn worked_example() -> Outcome {
    let mut r = rng(6);
    let srs = Srs::gen(4, Scalar::rand(&mut r)).unwrap();
    let dims = GridDims::new(2, 4, 2).unwrap();
    let data: Vec<u8> = (0..dims.capacity_bytes()).map(|_| r.gen()).collect();
    let grid = build_grid(&srs, &data, dims).unwrap();
    ensure!(
        grid.row_domain().len() == 8,
        "row domain has {} points",
        grid.row_domain().len()
    );
    let mds = partition_micro_domains(grid.row_domain(), 4).unwrap();
    ensure!(mds.len() == 2, "{} micro-domains", mds.len());
    for md in &mds {
        let group = build_opened_group(&grid, 0..2, md).unwrap();
        ensure!(
            group.flat_values().len() == 8,
            "group carries {} scalars",
            group.flat_values().len()
        );
        ensure!(group.values().iter().all(|v| v.len() == 4), "rows are not 4-vectors");
        let block = GCellBlock {
            rows_start: 0,
            rows_end: 2,
            cols_start: md.offset() as u32,
            cols_end: (md.offset() + 4) as u32,
        };
        let gamma = derive_gamma(&Transcript::for_block(srs.id(), group.commitments(), md, block));
        let proof = open_shared(&srs, grid.row_polys(), md, &gamma).unwrap();
        ensure!(
            verify_shared(&srs, &group, &proof, &gamma).unwrap(),
            "micro-domain at {} rejected",
            md.offset()
        );
    }
    let fixture = pmp_cli::gen_fixture(dims, GroupLayout::new(4, 2).unwrap(), None, 6).map_err(|e| e.to_string())?;
    let proofs = pmp_cli::cmd_prove(&fixture).map_err(|e| e.to_string())?;
    let n = pmp_cli::cmd_verify(&proofs).map_err(|e| e.to_string())?;
    ensure!(n == 2, "{n} objects verified end to end");
    Ok("2 micro-domains, 8 scalars per group, prove/verify round trip".into())
}

fn wire_exactness() -> Outcome {
    let cases = 10_000;
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    // empty blocks are rejected by the decoder, so every block has a cell
    let strategy = (0u32..1000, 1u32..5, 0u32..1000, 1u32..17, any::<u64>());
    let ran = std::cell::Cell::new(0u32);
    runner
        .run(&strategy, |(rs, rows, cs, cols, seed)| {
            let mut r = rng(seed);
            let block = GCellBlock {
                rows_start: rs,
                rows_end: rs + rows,
                cols_start: cs,
                cols_end: cs + cols,
            };
            let mut proof = [0u8; 48];
            r.fill(&mut proof[..]);
            let m = MCell {
                proof,
                block,
                scalars: (0..block.cell_count()).map(|_| Scalar::rand(&mut r)).collect(),
            };
            let bytes = encode_mcell(&m);
            prop_assert_eq!(bytes.len(), 48 + 16 + 4 + 32 * m.scalars.len());
            let back = decode_mcell(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(encode_mcell(&back), bytes);

            let cell = BaselineCell {
                proof,
                data: Scalar::from_le_bytes_mod_order(&proof[..32]),
            };
            let cb = cell.encode();
            prop_assert_eq!(cb.len(), 80);
            let back = BaselineCell::decode(&cb).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(back.encode(), cb);
            ran.set(ran.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let ran = ran.get();
    ensure!(ran >= cases, "only {ran} cases ran");
    Ok(format!("{ran} MCell and BaselineCell round trips byte-identical"))
}

fn sample_accounting() -> Outcome {
    for s in 0..=256u64 {
        for g in 1..=32u64 {
            let e = effective_samples(s, g).map_err(|e| e.to_string())?;
            ensure!(e == s / g, "effective_samples({s}, {g}) = {e}");
        }
    }
    ensure!(effective_samples(5, 0).is_err(), "g = 0 accepted");
    let dims = GridDims::new(32, 16, 2).unwrap();
    let mut plans = 0;
    for target in 0..=32u64 {
        for g in 1..=32u64 {
            let plan = SamplingPlan::for_target(&dims, target, g, target * 100 + g).map_err(|e| e.to_string())?;
            let s = plan.coordinates.len() as u64;
            ensure!(
                s == required_samples(target, g).unwrap(),
                "plan size {s} for target {target}, g {g}"
            );
            ensure!(
                effective_samples(s, g).unwrap() >= target,
                "target {target}, g {g}: short plan"
            );
            plans += 1;
        }
    }
    Ok(format!(
        "sweep s <= 256, g <= 32 exact; {plans} composed plans meet their targets"
    ))
}

fn network_trends() -> Outcome {
    let churn = [0.1, 0.2, 0.3];
    let cfg = ExperimentConfig {
        rows: 4,
        cols: 8,
        extension: 2,
        peers: 50,
        replication: 5,
        light_clients: 1,
        samples: 16,
        churn: churn.to_vec(),
        seed: 1000,
        runs: 50,
        ..Default::default()
    };
    ensure!(cfg.dims().unwrap().extended_cells() == 64, "grid is not 64 cells");
    let records = Experiment::new(cfg.clone())
        .unwrap()
        .run_all()
        .map_err(|e| e.to_string())?;
    let rate = |mode: ConfigMode, c: f64, seed: u64| {
        records
            .iter()
            .find(|r| r.mode == mode && r.churn == c && r.seed == seed)
            .map(|r| r.hit_rate)
            .unwrap()
    };
    for &c in &churn {
        for seed in cfg.seeds() {
            let (v, b) = (
                rate(ConfigMode::Vanilla, c, seed),
                rate(ConfigMode::BatchedSingle, c, seed),
            );
            ensure!(v == b, "seed {seed}, churn {c}: vanilla {v} vs batched {b}");
        }
    }
    let mean = |mode, c| pmp_core::dasnet::mean_hit_rate(&records, mode, c).unwrap();
    let mut summary = Vec::new();
    for &c in &churn {
        let (v, g, p) = (
            mean(ConfigMode::Vanilla, c),
            mean(ConfigMode::GroupedOnly, c),
            mean(ConfigMode::Pmp, c),
        );
        ensure!(
            p >= g && g >= v,
            "churn {c}: pmp {p:.4}, grouped {g:.4}, vanilla {v:.4}"
        );
        summary.push(format!("{c}: {v:.3}/{g:.3}/{p:.3}"));
    }
    for mode in ConfigMode::ALL {
        for w in churn.windows(2) {
            ensure!(
                mean(mode, w[1]) <= mean(mode, w[0]),
                "{mode} hit rate rises from churn {} to {}",
                w[0],
                w[1]
            );
        }
    }
    Ok(format!(
        "50 paired seeds, mean hit rate vanilla/grouped/pmp at churn {}",
        summary.join(", ")
    ))
}

fn ablation_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("ablation.cfg");
    std::fs::write(&config, "runs = 2\nlight_clients = 1\nsamples = 8\nchurn = 0.0, 0.3\n").unwrap();
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_pmp"))
            .args(["ablation", "--config"])
            .arg(&config)
            .arg("--output")
            .arg(&out)
            .env_remove("PMP_SEED")
            .status()
            .map_err(|e| e.to_string())?;
        ensure!(status.success(), "pmp ablation exited with {status}");
        std::fs::read(&out).map_err(|e| e.to_string())
    };
    let a = run("first.csv")?;
    let b = run("second.csv")?;
    ensure!(!a.is_empty(), "empty output");
    ensure!(a == b, "outputs differ");
    Ok(format!("two runs wrote identical {} byte files", a.len()))
}

//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use genderprobe_core::weat::{EmbeddingTable, WeatSpec, TIE_TOLERANCE};
use genderprobe_core::SentenceRecord;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub const DIM: usize = 5;
pub const VOCAB: usize = 16;

pub struct Case {
    pub table: EmbeddingTable,
    pub vectors: Vec<Vec<f64>>,
    pub spec: WeatSpec,
}

pub fn word(i: usize) -> String {
    format!("w{i}")
}

pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let mut table = EmbeddingTable::new(DIM);
    let mut vectors = Vec::new();
    for i in 0..VOCAB {
        let v: Vec<f64> = (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
        table.insert(word(i), v.clone()).unwrap();
        vectors.push(v);
    }
    let half = rng.random_range(1..=4);
    let pick = |n: usize, phrases: bool, rng: &mut ChaCha8Rng| -> Vec<String> {
        (0..n)
            .map(|_| {
                if phrases && rng.random_bool(0.2) {
                    format!("{} {}", word(rng.random_range(0..VOCAB)), word(rng.random_range(0..VOCAB)))
                } else {
                    word(rng.random_range(0..VOCAB))
                }
            })
            .collect()
    };
    let x = pick(half, true, rng);
    let y = pick(half, true, rng);
    let a_len = rng.random_range(1..=4);
    let a = pick(a_len, false, rng);
    let b_len = rng.random_range(1..=4);
    let b = pick(b_len, false, rng);
    Case {
        table,
        vectors,
        spec: WeatSpec { x, y, a, b },
    }
}

// Independent reimplementation: explicit loops, no shared helpers.
pub fn oracle_vec(case: &Case, item: &str) -> Vec<f64> {
    let ids: Vec<usize> = item
        .split(' ')
        .map(|w| w[1..].parse::<usize>().unwrap())
        .collect();
    let mut out = vec![0.0; DIM];
    for &id in &ids {
        for (o, x) in out.iter_mut().zip(&case.vectors[id]) {
            *o += x;
        }
    }
    for v in &mut out {
        *v /= ids.len() as f64;
    }
    out
}

pub fn oracle_cos(u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for d in 0..DIM {
        dot += u[d] * v[d];
        nu += u[d] * u[d];
        nv += v[d] * v[d];
    }
    dot / (nu.sqrt() * nv.sqrt())
}

pub fn oracle_s(case: &Case, item: &str) -> f64 {
    let w = oracle_vec(case, item);
    let mut sa = 0.0;
    for a in &case.spec.a {
        sa += oracle_cos(&w, &oracle_vec(case, a));
    }
    let mut sb = 0.0;
    for b in &case.spec.b {
        sb += oracle_cos(&w, &oracle_vec(case, b));
    }
    sa / case.spec.a.len() as f64 - sb / case.spec.b.len() as f64
}

pub fn oracle_items(case: &Case) -> Vec<f64> {
    case.spec
        .x
        .iter()
        .chain(&case.spec.y)
        .map(|item| oracle_s(case, item))
        .collect()
}

pub fn oracle_statistic(case: &Case) -> f64 {
    let s = oracle_items(case);
    let h = case.spec.x.len();
    s[..h].iter().sum::<f64>() - s[h..].iter().sum::<f64>()
}

pub fn oracle_pvalue(case: &Case) -> f64 {
    let s = oracle_items(case);
    let n = s.len();
    let h = n / 2;
    let observed = oracle_statistic(case);
    let mut total = 0u32;
    let mut greater = 0u32;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != h {
            continue;
        }
        total += 1;
        let mut stat = 0.0;
        for (i, v) in s.iter().enumerate() {
            if mask & (1 << i) != 0 {
                stat += v;
            } else {
                stat -= v;
            }
        }
        if stat > observed + TIE_TOLERANCE {
            greater += 1;
        }
    }
    f64::from(greater) / f64::from(total)
}

pub fn cases() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x57ea7);
    (0..100).map(|_| random_case(&mut rng)).collect()
}


const SUBJECTS: &[&str] = &[
    "Someone", "The nurse", "A girl", "The pilot", "The old farmer", "A man", "The woman",
    "The dancer", "Her mother", "The boy",
];
const VERBS: &[&str] = &["lifts", "drops", "waves", "cleans", "grabs", "checks", "shows"];
const PRONOUNS: &[&str] = &["his", "her", "him", "he", "she", "himself", "herself", "their"];
const OBJECTS: &[&str] = &["bag", "coat", "hat", "phone", "hands", "car", "friend"];
const TAILS: &[&str] = &["", " at the gate", " and his dog barks", " near her sister", " quickly"];

pub fn sentence() -> impl Strategy<Value = String> {
    (
        prop::sample::select(SUBJECTS),
        prop::sample::select(VERBS),
        prop::sample::select(PRONOUNS),
        prop::sample::select(OBJECTS),
        prop::sample::select(TAILS),
    )
        .prop_map(|(s, v, p, o, t)| format!("{s} {v} {p} {o}{t}."))
}

pub fn corpus() -> impl Strategy<Value = Vec<SentenceRecord>> {
    prop::collection::vec(sentence(), 500).prop_map(|texts| {
        texts
            .into_iter()
            .enumerate()
            .map(|(i, text)| SentenceRecord {
                id: format!("s{i}"),
                text,
                source: "synthetic".into(),
            })
            .collect()
    })
}

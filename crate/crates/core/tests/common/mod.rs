#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use vidsem_core::ingest::{
    build_corpus_index, load_lexicon, parse_concept_shots_xml, parse_contexts_xml,
    parse_shot_counts, IngestReport,
};
use vidsem_core::{build_weight_matrix, ConceptId, ConceptQueryVector, CorpusIndex, WeightMatrix};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")
}

pub fn read(path: PathBuf) -> Vec<u8> {
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// A corpus described by raw annotations: per video, the concept set of each shot.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub concepts: Vec<u32>,
    pub videos: Vec<(String, Vec<BTreeSet<u32>>)>,
    pub contexts: Vec<(String, Vec<u32>)>,
}

impl SyntheticCorpus {
    /// Random corpus within the given bounds.
    pub fn random(
        rng: &mut StdRng,
        max_videos: usize,
        max_concepts: usize,
        max_shots: usize,
    ) -> Self {
        let n_concepts = rng.random_range(1..=max_concepts);
        let concepts: Vec<u32> = (1..=n_concepts as u32).map(|c| c * 3 + 1).collect();
        let n_videos = rng.random_range(1..=max_videos);
        let density: f64 = rng.random_range(0.1..0.6);
        let videos = (0..n_videos)
            .map(|v| {
                let n_shots = rng.random_range(1..=max_shots);
                let shots = (0..n_shots)
                    .map(|_| {
                        concepts
                            .iter()
                            .copied()
                            .filter(|_| rng.random_bool(density))
                            .collect()
                    })
                    .collect();
                (format!("vid{v}"), shots)
            })
            .collect();
        let n_contexts = rng.random_range(0..=3);
        let contexts = (0..n_contexts)
            .map(|i| {
                let members = concepts
                    .iter()
                    .copied()
                    .filter(|_| rng.random_bool(0.4))
                    .collect();
                (format!("ctx{i}"), members)
            })
            .collect();
        SyntheticCorpus {
            concepts,
            videos,
            contexts,
        }
    }

    pub fn concepts_xml(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<concept>\n");
        for &c in &self.concepts {
            let _ = writeln!(
                out,
                "<videoFeatureExtractionFeatureResult fNum=\"{c}\" ConceptName=\"c{c}\">"
            );
            let mut seq = 1;
            for (vid, shots) in &self.videos {
                for (s, set) in shots.iter().enumerate() {
                    if set.contains(&c) {
                        let _ = writeln!(out, "<item segNum=\"{seq}\" shotId=\"{vid}_{s}\"/>");
                        seq += 1;
                    }
                }
            }
            out.push_str("</videoFeatureExtractionFeatureResult>\n");
        }
        out.push_str("</concept>\n");
        out
    }

    pub fn contexts_xml(&self) -> String {
        let mut out = String::from("<contextes>\n");
        for (name, members) in &self.contexts {
            let _ = writeln!(
                out,
                "<Contexte Num=\"1\" Name=\"{name}\" Nbrconcept=\"{}\">",
                members.len()
            );
            for m in members {
                let _ = writeln!(out, "<concept ConceptId=\"{m}\" Weight=\"1\"/>");
            }
            out.push_str("</Contexte>\n");
        }
        out.push_str("</contextes>\n");
        out
    }

    pub fn shot_counts_tsv(&self) -> String {
        self.videos
            .iter()
            .map(|(v, shots)| format!("{v}\t{}\n", shots.len()))
            .collect()
    }

    pub fn build(&self) -> (CorpusIndex, WeightMatrix, IngestReport) {
        let (index, report) = build_corpus_index(
            parse_concept_shots_xml(self.concepts_xml().as_bytes()).unwrap(),
            parse_contexts_xml(self.contexts_xml().as_bytes()).unwrap(),
            load_lexicon(b"").unwrap(),
            Some(parse_shot_counts(self.shot_counts_tsv().as_bytes()).unwrap()),
        )
        .unwrap();
        let matrix = build_weight_matrix(&index).unwrap();
        (index, matrix, report)
    }

    /// Combined weights recomputed from the raw annotations alone.
    pub fn oracle_weights(&self) -> BTreeMap<(String, u32), f64> {
        let mut n_videos_with: BTreeMap<u32, usize> = BTreeMap::new();
        for (_, shots) in &self.videos {
            let present: BTreeSet<u32> = shots.iter().flatten().copied().collect();
            for c in present {
                *n_videos_with.entry(c).or_default() += 1;
            }
        }
        let similar = |c: u32| -> usize {
            let mut sim = BTreeSet::new();
            for (_, members) in &self.contexts {
                if members.contains(&c) {
                    sim.extend(members.iter().copied().filter(|&m| m != c));
                }
            }
            sim.len()
        };
        let mut out = BTreeMap::new();
        for (vid, shots) in &self.videos {
            let n = shots.len() as f64;
            let present: BTreeSet<u32> = shots.iter().flatten().copied().collect();
            let nb_concepts = present.len() as f64;
            for &c in &present {
                let nb_shots = shots.iter().filter(|s| s.contains(&c)).count() as f64;
                let p1 = nb_shots / n;
                let p2 = (similar(c).max(1)) as f64 / (nb_concepts * n_videos_with[&c] as f64);
                out.insert((vid.clone(), c), p1 * p2);
            }
        }
        out
    }

    pub fn video_ids(&self) -> Vec<String> {
        self.videos.iter().map(|(v, _)| v.clone()).collect()
    }
}

/// Exhaustive cosine over dense vectors built from oracle weights, sorted by
/// similarity descending then id; zero similarities dropped.
pub fn oracle_ranking(
    query: &BTreeMap<u32, f64>,
    weights: &BTreeMap<(String, u32), f64>,
    videos: &[String],
    concepts: &[u32],
) -> Vec<(String, f64)> {
    let qv: Vec<f64> = concepts
        .iter()
        .map(|c| query.get(c).copied().unwrap_or(0.0))
        .collect();
    let qn = qv.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out: Vec<(String, f64)> = videos
        .iter()
        .filter_map(|v| {
            let vv: Vec<f64> = concepts
                .iter()
                .map(|&c| weights.get(&(v.clone(), c)).copied().unwrap_or(0.0))
                .collect();
            let vn = vv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if qn == 0.0 || vn == 0.0 {
                return None;
            }
            let dot: f64 = qv.iter().zip(&vv).map(|(a, b)| a * b).sum();
            let sim = dot / (qn * vn);
            (sim > 0.0).then(|| (v.clone(), sim))
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// True when `got` lists the same videos as `expected` in the same order,
/// except that entries whose oracle similarities lie within `tie_tol` of each
/// other may appear in any order among themselves.
pub fn same_order_modulo_ties(got: &[String], expected: &[(String, f64)], tie_tol: f64) -> bool {
    if got.len() != expected.len() {
        return false;
    }
    let mut i = 0;
    while i < expected.len() {
        let head = expected[i].1;
        let mut j = i;
        while j < expected.len() && (expected[j].1 - head).abs() <= tie_tol {
            j += 1;
        }
        let want: BTreeSet<&String> = expected[i..j].iter().map(|(v, _)| v).collect();
        let have: BTreeSet<&String> = got[i..j].iter().collect();
        if want != have {
            return false;
        }
        i = j;
    }
    true
}

pub fn random_query(rng: &mut StdRng, concepts: &[u32]) -> BTreeMap<u32, f64> {
    let mut q = BTreeMap::new();
    for &c in concepts {
        if rng.random_bool(0.4) {
            q.insert(c, rng.random_range(0.01..1.0));
        }
    }
    if q.is_empty() {
        q.insert(concepts[rng.random_range(0..concepts.len())], 1.0);
    }
    q
}

pub fn to_query_vector(q: &BTreeMap<u32, f64>) -> ConceptQueryVector {
    q.iter().map(|(&c, &w)| (ConceptId(c), w)).collect()
}

/// Planted corpus for feedback experiments: `n_relevant` videos share a
/// three-concept signature; distractors carry the first signature concept
/// together with unrelated concepts.
pub struct PlantedCorpus {
    pub corpus: SyntheticCorpus,
    pub relevant: BTreeSet<String>,
    pub query_concept: u32,
}

pub fn planted_corpus(
    seed: u64,
    n_videos: usize,
    n_concepts: usize,
    n_relevant: usize,
) -> PlantedCorpus {
    let mut rng = StdRng::seed_from_u64(seed);
    let concepts: Vec<u32> = (1..=n_concepts as u32).collect();
    let signature = [1u32, 2, 3];
    let noise: Vec<u32> = concepts
        .iter()
        .copied()
        .filter(|c| !signature.contains(c))
        .collect();
    let mut videos = Vec::new();
    let mut relevant = BTreeSet::new();
    for v in 0..n_videos {
        let id = format!("vid{v:02}");
        let is_relevant = v < n_relevant;
        let n_shots = rng.random_range(6..=12);
        let shots: Vec<BTreeSet<u32>> = (0..n_shots)
            .map(|_| {
                let mut set = BTreeSet::new();
                if is_relevant {
                    for &c in &signature {
                        if rng.random_bool(0.6) {
                            set.insert(c);
                        }
                    }
                    if rng.random_bool(0.15) {
                        set.insert(noise[rng.random_range(0..noise.len())]);
                    }
                } else {
                    if rng.random_bool(0.5) {
                        set.insert(signature[0]);
                    }
                    if rng.random_bool(0.1) {
                        set.insert(signature[1 + rng.random_range(0..2)]);
                    }
                    for _ in 0..2 {
                        if rng.random_bool(0.5) {
                            set.insert(noise[rng.random_range(0..noise.len())]);
                        }
                    }
                }
                set
            })
            .collect();
        if is_relevant {
            relevant.insert(id.clone());
        }
        videos.push((id, shots));
    }
    // Contexts of four concepts each.
    let contexts = concepts
        .chunks(4)
        .enumerate()
        .map(|(i, chunk)| (format!("group{i}"), chunk.to_vec()))
        .collect();
    PlantedCorpus {
        corpus: SyntheticCorpus {
            concepts,
            videos,
            contexts,
        },
        relevant,
        query_concept: signature[0],
    }
}

//! A corpus the size of a full benchmark collection: 130 concepts, about
//! 2700 videos and 62,838 annotated shots.

use std::fmt::Write as _;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use vidsem_core::ingest::{build_corpus_index, parse_concept_shots_xml, ParsedContexts};
use vidsem_core::{build_weight_matrix, rank, ConceptId, ConceptQueryVector};

const CONCEPTS: u32 = 130;
const VIDEOS: usize = 2700;
const SHOTS: usize = 62_838;

fn collection_xml() -> String {
    let mut rng = StdRng::seed_from_u64(2010);
    // Shots are numbered per video; each annotation names one concept.
    let mut per_concept: Vec<Vec<String>> = vec![Vec::new(); CONCEPTS as usize];
    for shot in 0..SHOTS {
        let video = shot % VIDEOS;
        let concept = rng.random_range(0..CONCEPTS as usize);
        per_concept[concept].push(format!("shot{video}_{}", shot / VIDEOS + 1));
    }
    let mut xml = String::from("<concept>\n");
    for (i, shots) in per_concept.iter().enumerate() {
        let _ = writeln!(
            xml,
            "<videoFeatureExtractionFeatureResult fNum=\"{}\" ConceptName=\"concept{}\">",
            i + 1,
            i + 1
        );
        for (seq, shot) in shots.iter().enumerate() {
            let _ = writeln!(xml, "<item segNum=\"{}\" shotId=\"{shot}\"/>", seq + 1);
        }
        xml.push_str("</videoFeatureExtractionFeatureResult>\n");
    }
    xml.push_str("</concept>\n");
    xml
}

#[test]
fn full_collection_indexes_and_ranks() {
    let xml = collection_xml();
    let start = Instant::now();
    let parsed = parse_concept_shots_xml(xml.as_bytes()).unwrap();
    let (index, report) =
        build_corpus_index(parsed, ParsedContexts::default(), vec![], None).unwrap();
    let matrix = build_weight_matrix(&index).unwrap();
    eprintln!("indexed in {:?}", start.elapsed());

    assert_eq!(report.concepts_parsed, 130);
    assert_eq!(report.shots_parsed, SHOTS);
    assert_eq!(report.videos_indexed, VIDEOS);
    assert_eq!(matrix.videos().len(), VIDEOS);

    let query: ConceptQueryVector = [(ConceptId(7), 0.6), (ConceptId(42), 0.4)]
        .into_iter()
        .collect();
    let results = rank(&query, &matrix, 60).unwrap();
    assert_eq!(results.len(), 60);
    assert!(results
        .windows(2)
        .all(|w| w[0].similarity >= w[1].similarity));
    assert_eq!(
        results.iter().map(|r| r.rank).collect::<Vec<_>>(),
        (1..=60).collect::<Vec<_>>()
    );
}

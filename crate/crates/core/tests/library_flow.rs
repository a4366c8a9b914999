use threecp_core::arpad::{read_patterns, write_patterns};
use threecp_core::index;
use threecp_core::preprocess::standardize_set;
use threecp_core::{
    analyze, build_index, cluster_threshold, detect_all, group_same_position, parse_curves,
    Alphabet, AnalyzeOptions, ClusterMethod, CurveFormat, DiscreteSequence, DiscretizeMethod,
    Discretizer, Error, ErrorKind, ScanOrder,
};

fn worked() -> (Vec<DiscreteSequence>, Alphabet) {
    let abc = Alphabet::new("abcd").unwrap();
    let seqs = ["abcdcbabcd", "abcbdbabcd", "cbcdbaabcb"]
        .iter()
        .enumerate()
        .map(|(i, s)| DiscreteSequence::new((i + 1).to_string(), abc.parse(s).unwrap()))
        .collect();
    (seqs, abc)
}

#[test]
fn persisted_index_and_patterns_reproduce_the_in_memory_result() {
    let (seqs, abc) = worked();
    let dir = tempfile::tempdir().unwrap();
    let idx = build_index(&seqs, 4, 2, 5, 2).unwrap();
    index::persist(&idx, &dir.path().join("index"), &abc, 2).unwrap();
    let (loaded, loaded_abc) = index::load(&dir.path().join("index"), 2).unwrap();
    assert_eq!(loaded, idx);
    assert_eq!(loaded_abc, abc);

    let patterns = detect_all(&loaded, 2).unwrap();
    let dump = dir.path().join("patterns.tsv");
    write_patterns(&patterns, &abc, &dump).unwrap();
    assert_eq!(read_patterns(&dump, &abc, 2, 5).unwrap(), patterns);

    let r = analyze(
        &group_same_position(&patterns),
        ScanOrder::PositionAsc,
        10,
        3,
        &AnalyzeOptions::default(),
    )
    .unwrap();
    let c = cluster_threshold(&r.similarity(), 0.7, ClusterMethod::SingleLinkage).unwrap();
    assert_eq!(c.clusters, vec![vec![1, 2], vec![3]]);
}

#[test]
fn identical_curves_form_one_cluster() {
    let row: Vec<String> = (0..50)
        .map(|i| ((i as f64) / 5.0).sin().to_string())
        .collect();
    let text = format!("a,{0}\nb,{0}\nc,{0}\n", row.join(","));
    let set = parse_curves(&text, CurveFormat::CsvWide, "inline").unwrap();
    let curves = standardize_set(&set, true).unwrap();
    let d = Discretizer::fit(DiscretizeMethod::EqualWidth, 8, &[], 3.0).unwrap();
    let seqs: Vec<_> = curves.iter().map(|c| d.discretize_curve(c)).collect();
    let idx = build_index(&seqs, 8, 2, 6, 1).unwrap();
    let groups = group_same_position(&detect_all(&idx, 1).unwrap());
    let r = analyze(
        &groups,
        ScanOrder::LengthAsc,
        50,
        3,
        &AnalyzeOptions::default(),
    )
    .unwrap();
    let sim = r.similarity();
    assert_eq!(
        (sim.get(1, 2), sim.get(1, 3), sim.get(2, 3)),
        (1.0, 1.0, 1.0)
    );
}

#[test]
fn error_kinds() {
    let e = parse_curves("a,1,2\nb,nan,3\n", CurveFormat::CsvWide, "inline").unwrap_err();
    assert_eq!(e.kind(), ErrorKind::Validation);
    let e = parse_curves("a,1,1,1\n", CurveFormat::CsvWide, "inline")
        .map(|s| standardize_set(&s, true))
        .unwrap()
        .unwrap_err();
    assert!(matches!(e, Error::DegenerateCurve { .. }), "{e}");
    let e = index::load(std::path::Path::new("/nonexistent/index"), 1).unwrap_err();
    assert_eq!(e.kind(), ErrorKind::Io);
}

use chainhac_wasm::Demo;

#[test]
fn generate_cluster_cut() {
    let mut demo = Demo::generate("gaussian", 400, 7).unwrap();
    assert_eq!(demo.len(), 400);
    assert_eq!(demo.coords().len(), 800);
    assert_eq!(demo.labels(5).unwrap(), vec![0; 400]);
    demo.cluster("ward", None).unwrap();
    let labels = demo.labels(5).unwrap();
    let mut used = labels.clone();
    used.sort_unstable();
    used.dedup();
    assert_eq!(used, vec![0, 1, 2, 3, 4]);
    assert_eq!(demo.merges().len(), 4 * 399);
    let rounds = demo.rounds();
    let merged: u32 = rounds.chunks(3).map(|r| r[2]).sum();
    assert_eq!(merged, 399);
    assert!(demo.distance_evaluations() > 0.0);
}

#[test]
fn every_linkage_runs() {
    let mut demo = Demo::generate("uniform", 200, 1).unwrap();
    for l in ["comp", "ward", "avg1", "avg2"] {
        demo.run_linkage(l, Some(8)).unwrap();
        assert_eq!(demo.dendrogram().unwrap().merges().len(), 199);
    }
    assert!(demo.run_linkage("single", None).is_err());
    assert!(Demo::generate("spiral", 10, 1).is_err());
    assert!(Demo::generate("gaussian", 5, 1).is_err());
}

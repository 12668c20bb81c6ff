use super::*;
use ndarray::array;
use proptest::prelude::*;

fn toy_dataset(per_class: &[usize]) -> Dataset {
    let m: usize = per_class.iter().sum();
    let n = per_class.len();
    let mut labels = Vec::with_capacity(m);
    for (c, &count) in per_class.iter().enumerate() {
        labels.extend(std::iter::repeat(c).take(count));
    }
    let inputs = Array2::from_shape_fn((m, 3), |(i, j)| (i * 10 + j) as f64 / (m * 10) as f64);
    Dataset::new(inputs, labels, n, "toy").unwrap()
}

#[test]
fn dataset_invariants_enforced() {
    let x = array![[0.0, 1.0]];
    assert!(Dataset::new(x.clone(), vec![2], 2, "t").is_err()); // label out of range
    assert!(Dataset::new(x.clone(), vec![0, 1], 2, "t").is_err()); // row/label mismatch
    assert!(Dataset::new(array![[f64::NAN, 0.0]], vec![0], 1, "t").is_err());
    let empty: Array2<f64> = Array2::zeros((0, 2));
    assert!(Dataset::new(empty, vec![], 2, "t").is_err());
}

#[test]
fn idx_fixture_bytes_parse_to_expected_values() {
    // 1 image of 2×2 pixels {0, 255, 128, 0}, 1 label {7}
    let mut images = Vec::new();
    images.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    images.extend_from_slice(&1u32.to_be_bytes());
    images.extend_from_slice(&2u32.to_be_bytes());
    images.extend_from_slice(&2u32.to_be_bytes());
    images.extend_from_slice(&[0u8, 255, 128, 0]);
    let mut labels = Vec::new();
    labels.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    labels.extend_from_slice(&1u32.to_be_bytes());
    labels.push(7);

    let ds = parse_idx(&images, &labels).unwrap();
    assert_eq!(ds.len(), 1);
    assert_eq!(ds.in_dim(), 4);
    assert_eq!(ds.labels(), &[7]);
    assert_eq!(ds.inputs()[[0, 0]], 0.0);
    assert_eq!(ds.inputs()[[0, 1]], 1.0);
    assert!((ds.inputs()[[0, 2]] - 128.0 / 255.0).abs() < 1e-15);
    assert_eq!(ds.inputs()[[0, 3]], 0.0);
}

#[test]
fn idx_errors_name_the_offset() {
    let bad_magic = 0xdeadbeefu32.to_be_bytes().to_vec();
    let labels = {
        let mut l = 0x0000_0801u32.to_be_bytes().to_vec();
        l.extend_from_slice(&0u32.to_be_bytes());
        l
    };
    match parse_idx(&bad_magic, &labels) {
        Err(crate::Error::Parse { offset, message }) => {
            assert_eq!(offset, 0);
            assert!(message.contains("magic"));
        }
        other => panic!("expected parse error, got {other:?}"),
    }

    // truncated pixel payload
    let mut images = Vec::new();
    images.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    images.extend_from_slice(&2u32.to_be_bytes());
    images.extend_from_slice(&2u32.to_be_bytes());
    images.extend_from_slice(&2u32.to_be_bytes());
    images.extend_from_slice(&[1, 2, 3]); // needs 8 bytes
    match parse_idx(&images, &labels) {
        Err(crate::Error::Parse { offset, .. }) => assert_eq!(offset, 16),
        other => panic!("expected parse error, got {other:?}"),
    }

    // count mismatch reported at the label count field
    let mut images = Vec::new();
    images.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    images.extend_from_slice(&1u32.to_be_bytes());
    images.extend_from_slice(&1u32.to_be_bytes());
    images.extend_from_slice(&1u32.to_be_bytes());
    images.push(9);
    let mut labels2 = 0x0000_0801u32.to_be_bytes().to_vec();
    labels2.extend_from_slice(&2u32.to_be_bytes());
    labels2.extend_from_slice(&[1, 2]);
    match parse_idx(&images, &labels2) {
        Err(crate::Error::Parse { offset, message }) => {
            assert_eq!(offset, 4);
            assert!(message.contains("count"));
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn idx_empty_count_rejected_by_dataset_invariant() {
    let mut images = Vec::new();
    images.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    images.extend_from_slice(&0u32.to_be_bytes());
    images.extend_from_slice(&2u32.to_be_bytes());
    images.extend_from_slice(&2u32.to_be_bytes());
    let mut labels = 0x0000_0801u32.to_be_bytes().to_vec();
    labels.extend_from_slice(&0u32.to_be_bytes());
    assert!(matches!(parse_idx(&images, &labels), Err(crate::Error::Data(_))));
}

#[test]
fn idx_file_round_trip() {
    let ds = toy_dataset(&[4, 3, 5]);
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img-ubyte");
    let lab = dir.path().join("lab-ubyte");
    // quantize to the u8 grid first so the round trip is exact
    let quantized = {
        let inputs = ds.inputs().mapv(|v| (v * 255.0).round() / 255.0);
        Dataset::new(inputs, ds.labels().to_vec(), ds.n_classes(), "toy").unwrap()
    };
    write_idx(&quantized, &img, &lab).unwrap();
    let back = load_idx(&img, &lab).unwrap();
    assert_eq!(back.inputs(), quantized.inputs());
    assert_eq!(back.labels(), quantized.labels());
}

#[test]
fn subsample_identity_at_ratio_one() {
    let ds = toy_dataset(&[10, 20, 5]);
    let out = subsample(&ds, 1.0, true, 3).unwrap();
    assert_eq!(out.dataset.inputs(), ds.inputs());
    assert_eq!(out.dataset.labels(), ds.labels());
    assert!(out.bumped_classes.is_empty());
}

#[test]
fn subsample_is_stratified_and_deterministic() {
    let ds = toy_dataset(&[100, 50, 50]);
    let a = subsample(&ds, 0.1, true, 5).unwrap();
    let b = subsample(&ds, 0.1, true, 5).unwrap();
    assert_eq!(a.dataset.inputs(), b.dataset.inputs());
    assert_eq!(a.dataset.len(), 20);
    let counts = class_counts(&a.dataset);
    assert_eq!(counts, vec![10, 5, 5]);
    let c = subsample(&ds, 0.1, true, 6).unwrap();
    assert_ne!(a.dataset.inputs(), c.dataset.inputs());
}

#[test]
fn subsample_keeps_starved_classes_alive() {
    let ds = toy_dataset(&[200, 4]);
    let out = subsample(&ds, 0.01, true, 1).unwrap();
    let counts = class_counts(&out.dataset);
    assert!(counts[1] >= 1, "tiny class must be kept");
    assert_eq!(out.bumped_classes, vec![1]);
}

#[test]
fn split_exact_sizes_and_stratification() {
    let ds = toy_dataset(&[50, 50]);
    let spec = SplitSpec::new(0.7, 0.15, 0.15, true, 4).unwrap();
    let (tr, va, te) = split(&ds, &spec).unwrap();
    assert_eq!((tr.len(), va.len(), te.len()), (70, 15, 15));
    for part in [&tr, &va, &te] {
        let counts = class_counts(part);
        assert!(
            counts[0].abs_diff(counts[1]) <= 1,
            "class balance off: {counts:?} in split of len {}",
            part.len()
        );
    }
}

#[test]
fn split_partitions_exactly() {
    let ds = toy_dataset(&[17, 23, 9]);
    let spec = SplitSpec::new(0.6, 0.2, 0.2, true, 9).unwrap();
    let (tr, va, te) = split(&ds, &spec).unwrap();
    assert_eq!(tr.len() + va.len() + te.len(), ds.len());
    // inputs carry a unique value per row, so multiset equality over the
    // first column proves disjoint exhaustiveness
    let mut seen: Vec<u64> = [&tr, &va, &te]
        .iter()
        .flat_map(|d| d.inputs().column(0).iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        .collect();
    seen.sort_unstable();
    let mut expect: Vec<u64> = ds.inputs().column(0).iter().map(|v| v.to_bits()).collect();
    expect.sort_unstable();
    assert_eq!(seen, expect);
}

#[test]
fn split_rejects_unstratifiable_class() {
    let ds = toy_dataset(&[10, 2]);
    let spec = SplitSpec::new(0.7, 0.15, 0.15, true, 0).unwrap();
    assert!(matches!(split(&ds, &spec), Err(crate::Error::Data(_))));
}

#[test]
fn holdout_carves_a_stratified_validation_set() {
    let ds = toy_dataset(&[50, 30, 20]);
    let (main, held) = holdout(&ds, 0.1, true, 3).unwrap();
    assert_eq!(main.len() + held.len(), 100);
    assert_eq!(held.len(), 10);
    assert_eq!(class_counts(&held), vec![5, 3, 2]);
    assert!(holdout(&ds, 0.0, true, 3).is_err());
    assert!(holdout(&ds, 1.0, true, 3).is_err());
}

#[test]
fn split_spec_validation() {
    assert!(SplitSpec::new(0.7, 0.15, 0.15, true, 0).is_ok());
    assert!(SplitSpec::new(0.7, 0.2, 0.2, true, 0).is_err());
    assert!(SplitSpec::new(0.7, 0.3, 0.0, true, 0).is_err());
}

fn class_counts(ds: &Dataset) -> Vec<usize> {
    let mut counts = vec![0usize; ds.n_classes()];
    for &l in ds.labels() {
        counts[l] += 1;
    }
    counts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_split_is_partition(
        c0 in 3usize..40, c1 in 3usize..40, c2 in 3usize..40, seed in 0u64..1000
    ) {
        let ds = toy_dataset(&[c0, c1, c2]);
        let spec = SplitSpec::new(0.7, 0.15, 0.15, true, seed).unwrap();
        let (tr, va, te) = split(&ds, &spec).unwrap();
        prop_assert_eq!(tr.len() + va.len() + te.len(), ds.len());
        // every class present in every split
        for part in [&tr, &va, &te] {
            let counts = class_counts(part);
            prop_assert!(counts.iter().all(|&c| c >= 1));
        }
    }

    #[test]
    fn prop_subsample_counts_near_target(
        c0 in 5usize..60, c1 in 5usize..60, ratio in 0.05f64..1.0, seed in 0u64..1000
    ) {
        let ds = toy_dataset(&[c0, c1]);
        let out = subsample(&ds, ratio, true, seed).unwrap();
        let target = (ds.len() as f64 * ratio).round() as usize;
        let n = ds.n_classes();
        prop_assert!(out.dataset.len().abs_diff(target.max(1)) <= n);
    }

    #[test]
    fn prop_idx_round_trip(m in 1usize..20, d in 1usize..16, seed in 0u64..500) {
        let mut rng = crate::rng::stream(seed, "prop-idx");
        use rand::Rng;
        let inputs = Array2::from_shape_fn((m, d), |_| {
            f64::from(rng.random_range(0u8..=255)) / 255.0
        });
        let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..10)).collect();
        let ds = Dataset::new(inputs, labels, 10, "prop").unwrap();
        let back = parse_idx(&idx_image_bytes(&ds), &idx_label_bytes(&ds).unwrap()).unwrap();
        prop_assert_eq!(back.inputs(), ds.inputs());
        prop_assert_eq!(back.labels(), ds.labels());
    }
}

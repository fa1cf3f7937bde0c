use std::fs;

use ttda_cli::dataset::{load_dataset, load_pgm_dir, load_tten_dir, save_tten_dir, LABELS_FILE};
use ttda_cli::{generate_synthetic, ExperimentConfig, Source, SyntheticSpec};
use ttda_core::io::save_tensor;
use ttda_core::Tensor;

fn ramp(shape: &[usize], offset: f64) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|i| i as f64 + offset).collect()).unwrap()
}

#[test]
fn tten_directory_with_two_classes() {
    let dir = tempfile::tempdir().unwrap();
    let mut labels = String::from("filename,class\n");
    for k in 0..6 {
        let name = format!("img{k}.tten");
        save_tensor(dir.path().join(&name), &ramp(&[64, 64], k as f64)).unwrap();
        labels.push_str(&format!("{name},{}\n", if k % 2 == 0 { "cat" } else { "dog" }));
    }
    fs::write(dir.path().join(LABELS_FILE), labels).unwrap();

    let data = load_tten_dir(dir.path()).unwrap();
    assert_eq!(data.len(), 6);
    assert_eq!(data.num_classes(), 2);
    assert_eq!(data.labels().iter().filter(|&&l| l == 0).count(), 3);
    assert_eq!(data.labels(), &[0, 1, 0, 1, 0, 1]);

    let mut cfg = ExperimentConfig::default();
    cfg.source = Source::Tten(dir.path().to_path_buf());
    cfg.reshape = Some(vec![8, 8, 8, 8]);
    let reshaped = load_dataset(&cfg).unwrap();
    assert_eq!(reshaped.shape(), &[8, 8, 8, 8]);
    assert_eq!(reshaped.samples()[3].data(), data.samples()[3].data());

    cfg.reshape = Some(vec![8, 8, 8]);
    assert!(load_dataset(&cfg).is_err());
}

#[test]
fn tten_label_problems_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    save_tensor(dir.path().join("a.tten"), &ramp(&[2, 2], 0.0)).unwrap();
    save_tensor(dir.path().join("b.tten"), &ramp(&[2, 2], 1.0)).unwrap();
    let err = load_tten_dir(dir.path()).unwrap_err().to_string();
    assert!(err.contains("labels"), "{err}");

    fs::write(dir.path().join(LABELS_FILE), "a.tten,0\n").unwrap();
    let err = load_tten_dir(dir.path()).unwrap_err().to_string();
    assert!(err.contains("b.tten"), "{err}");

    fs::write(dir.path().join(LABELS_FILE), "a.tten,0\nb.tten,1\nc.tten,1\n").unwrap();
    let err = load_tten_dir(dir.path()).unwrap_err().to_string();
    assert!(err.contains("c.tten"), "{err}");
}

#[test]
fn pgm_folders_become_classes() {
    let dir = tempfile::tempdir().unwrap();
    for (c, class) in ["s1", "s2"].iter().enumerate() {
        let sub = dir.path().join(class);
        fs::create_dir(&sub).unwrap();
        for k in 0..2u8 {
            let mut bytes = b"P5\n4 2\n255\n".to_vec();
            bytes.extend((0..8u8).map(|i| if i == 0 { 255 } else { i * 10 + k + c as u8 }));
            fs::write(sub.join(format!("{k}.pgm")), bytes).unwrap();
        }
    }
    let data = load_pgm_dir(dir.path()).unwrap();
    assert_eq!(data.len(), 4);
    assert_eq!(data.num_classes(), 2);
    assert_eq!(data.shape(), &[4, 2]);
    for s in data.samples() {
        assert_eq!(s.data()[0], 1.0);
        assert!(s.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
    assert!((data.samples()[0].data()[5] - 50.0 / 255.0).abs() < 1e-15);
}

#[test]
fn saved_synthetic_reloads_identically() {
    let spec = SyntheticSpec { shape: vec![3, 4, 2], per_class: 4, ranks: vec![2, 2], ..Default::default() };
    let (data, _) = generate_synthetic(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_tten_dir(dir.path(), &data).unwrap();
    let back = load_tten_dir(dir.path()).unwrap();
    assert_eq!(back.labels(), data.labels());
    for (a, b) in back.samples().iter().zip(data.samples()) {
        assert_eq!(a, b);
    }
}

#[test]
fn synthetic_generation_is_deterministic() {
    let spec = SyntheticSpec::default();
    let (a, ra) = generate_synthetic(&spec).unwrap();
    let (b, rb) = generate_synthetic(&spec).unwrap();
    assert_eq!(ra, rb);
    assert!(ra.separated);
    assert_eq!(a.len(), spec.classes * spec.per_class);
    assert!(a.samples().iter().zip(b.samples()).all(|(x, y)| x == y));
    let (c, _) = generate_synthetic(&SyntheticSpec { seed: spec.seed + 1, ..spec }).unwrap();
    assert!(a.samples()[0] != c.samples()[0]);
}

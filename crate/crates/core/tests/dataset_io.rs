use std::fs;
use std::path::Path;

use lfr_core::lf_data::{
    load_disparity, load_light_field, read_pfm, synthesize_light_field, write_disparity, write_light_field, write_pfm,
    Layer, SyntheticSceneSpec, Texture,
};
use lfr_core::{DisparityMap, Error, ImageGrid, LightField};
use proptest::prelude::*;

fn write_grid(dir: &Path, rows: usize, cols: usize) -> LightField {
    let views = (0..rows * cols)
        .map(|i| ImageGrid::from_fn(6, 5, 3, |y, x, c| ((i * 7 + y * 5 + x * 3 + c) % 17) as f64 / 16.0))
        .collect();
    let lf = LightField::from_grid(views, rows, cols, 1.0).unwrap();
    write_light_field(dir, &lf, 1.0, Some([0.0, 2.0])).unwrap();
    lf
}

#[test]
fn single_view_directory() {
    let dir = tempfile::tempdir().unwrap();
    write_grid(dir.path(), 1, 1);
    let lf = load_light_field(dir.path()).unwrap();
    assert_eq!(lf.len(), 1);
    assert_eq!(lf.reference_index(), 0);
    assert_eq!(lf.offsets(), &[(0.0, 0.0)]);
}

#[test]
fn three_by_three_directory_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let written = write_grid(dir.path(), 3, 3);
    let lf = load_light_field(dir.path()).unwrap();
    assert_eq!(lf.len(), 9);
    assert_eq!(lf.reference_index(), 4);
    assert_eq!(lf.offsets()[5], (1.0, 0.0));
    assert_eq!(lf.offsets()[1], (0.0, -1.0));
    for k in 0..9 {
        // 16-bit quantization
        assert!(lf.view(k).max_abs_diff(written.view(k)) <= 0.5 / 65535.0 + 1e-12);
    }
}

#[test]
fn missing_view_is_named_in_the_error() {
    let dir = tempfile::tempdir().unwrap();
    write_grid(dir.path(), 3, 3);
    fs::remove_file(dir.path().join("view_2_1.png")).unwrap();
    let err = load_light_field(dir.path()).unwrap_err();
    assert!(matches!(err, Error::Load { .. }));
    assert!(err.to_string().contains("view_2_1.png"), "{err}");
}

#[test]
fn malformed_meta_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    write_grid(dir.path(), 1, 1);
    fs::write(dir.path().join("meta.json"), "{\"rows\": 1, \"cols\": }").unwrap();
    let err = load_light_field(dir.path()).unwrap_err();
    assert!(matches!(err, Error::Parse { .. }));
    assert!(err.to_string().contains("line 1"), "{err}");
}

#[test]
fn synthetic_scene_survives_a_directory_round_trip() {
    let mut spec = SyntheticSceneSpec::new(32, 3, 3, 2, vec![Layer::full(Texture::Procedural { seed: 3 }, 1.0)]);
    spec.channels = 3;
    let scene = synthesize_light_field(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_light_field(dir.path(), &scene.lf, 1.0, None).unwrap();
    let lf = load_light_field(dir.path()).unwrap();
    assert_eq!(lf.offsets(), scene.lf.offsets());
    assert!(lf.reference().max_abs_diff(scene.lf.reference()) < 1e-5);
}

#[test]
fn all_zero_pfm_has_empty_range() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.pfm");
    write_pfm(&path, 4, 4, &[0.0; 16]).unwrap();
    let d = load_disparity(&path).unwrap();
    assert_eq!((d.height(), d.width()), (4, 4));
    assert_eq!((d.d_min(), d.d_max()), (0.0, 0.0));
}

#[test]
fn truncated_pfm_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.pfm");
    write_pfm(&path, 3, 3, &[1.0; 9]).unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    assert!(matches!(load_disparity(&path), Err(Error::Parse { .. })));
}

proptest! {
    #[test]
    fn disparity_files_round_trip_bit_exactly(
        (h, w, values) in (1usize..9, 1usize..9).prop_flat_map(|(h, w)| {
            (Just(h), Just(w), proptest::collection::vec(-50.0f32..50.0, h * w))
        })
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pfm");
        let dmap = DisparityMap::new(h, w, values.iter().map(|&v| v as f64).collect()).unwrap();
        write_disparity(&path, &dmap).unwrap();
        let back = load_disparity(&path).unwrap();
        prop_assert_eq!(back.values(), dmap.values());
        let (rh, rw, raw) = read_pfm(&path).unwrap();
        prop_assert_eq!((rh, rw), (h, w));
        prop_assert_eq!(raw, values);
    }
}

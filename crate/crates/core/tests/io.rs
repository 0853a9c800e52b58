use proptest::prelude::*;
use tentkit::config::{load_config, SolveConfig};
use tentkit::dg::DgSpace;
use tentkit::driver::{with_slopes, RateRow, SpeedBound, WindTunnel};
use tentkit::io::{
    dg_snapshot, parse_rates_csv, parse_vtk, rates_csv, read_vtk, vtk_string, wave_snapshot, write_json,
    write_rates_csv, write_vtk, FieldSnapshot, FieldValues,
};
use tentkit::mesh::SpatialMesh;
use tentkit::mixedfem::{wave_exact_standing, MixedSpace};

#[test]
fn vtk_round_trip_of_a_dg_field() {
    let mesh = SpatialMesh::structured_square(3).unwrap();
    let space = DgSpace::new(&mesh, 2);
    let u = space.project(|x| [x[0].sin() + x[1] * x[1], 1.0 / 3.0]);
    let snap = dg_snapshot(&space, &u, ["a", "b"], 0.125).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.vtk");
    write_vtk(&snap, &path).unwrap();
    let back = read_vtk(&path).unwrap();
    assert_eq!(back.time, Some(0.125));
    assert_eq!(back.cells.len(), 128);
    assert!(back.cell_types.iter().all(|&t| t == 5));
    assert_eq!(back.points.len(), mesh.num_vertices());
    assert_eq!(back.point_data, snap.point_data);
    assert_eq!(back.cell_data, snap.cell_data);
    // cell data carries the exact cell means
    let FieldValues::Scalar(a) = &back.cell_data[0].values else { panic!("scalar field expected") };
    for (e, &v) in a.iter().enumerate() {
        assert_eq!(v, space.cell_mean(&u, e)[0]);
    }
}

#[test]
fn wave_snapshot_round_trips() {
    let mesh = SpatialMesh::structured_square(2).unwrap();
    let space = MixedSpace::new(&mesh, 1);
    let st = space.interpolate(|x| wave_exact_standing(x, 0.2).0, |x| wave_exact_standing(x, 0.2).1);
    let snap = wave_snapshot(&space, &st, 0.2).unwrap();
    let back = parse_vtk(&vtk_string(&snap)).unwrap();
    assert_eq!(back.point_data, snap.point_data);
    assert_eq!(back.cell_data, snap.cell_data);
    assert!(back.point_data.iter().any(|f| matches!(f.values, FieldValues::Vector(_))));
}

#[test]
fn constant_field_on_two_triangles() {
    let mesh = SpatialMesh::structured_square(0).unwrap();
    let snap = FieldSnapshot::new(0.0, &mesh)
        .unwrap()
        .with_point("one", FieldValues::Scalar(vec![1.0; 4]))
        .unwrap();
    let text = vtk_string(&snap);
    assert!(text.contains("POINTS 4 double") && text.contains("CELLS 2 8"));
    let back = parse_vtk(&text).unwrap();
    assert_eq!(back.point_data[0].values, FieldValues::Scalar(vec![1.0; 4]));
    // wrong lengths and bad names are rejected
    assert!(FieldSnapshot::new(0.0, &mesh).unwrap().with_cell("c", FieldValues::Scalar(vec![1.0; 3])).is_err());
    assert!(FieldSnapshot::new(0.0, &mesh).unwrap().with_cell("two words", FieldValues::Scalar(vec![1.0; 2])).is_err());
    assert!(FieldSnapshot::new(-1.0, &mesh).is_err());
}

#[test]
fn writers_are_byte_identical() {
    let mesh = SpatialMesh::step_channel(0.3, 0.1).unwrap();
    let space = DgSpace::new(&mesh, 1);
    let u = space.project(|x| [x[0] * x[1]]);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.vtk"), dir.path().join("b.vtk"));
    write_vtk(&dg_snapshot(&space, &u, ["u"], 0.5).unwrap(), &a).unwrap();
    write_vtk(&dg_snapshot(&space, &u, ["u"], 0.5).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let cfg = WindTunnel::default();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    write_json(&cfg, &a).unwrap();
    write_json(&cfg, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn empty_rate_table_is_just_the_header() {
    assert_eq!(rates_csv(&[]), "p,h,e,slope\n");
    assert!(parse_rates_csv("p,h,e,slope\n").unwrap().is_empty());
    assert!(parse_rates_csv("p,h,e\n").is_err());
}

#[test]
fn rates_file_round_trip() {
    let rows = with_slopes(
        (2..6)
            .map(|l| {
                let h = 0.5f64.powi(l);
                RateRow { p: 2, h, e: 0.3 * h * h, slope: f64::NAN }
            })
            .collect(),
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rates.csv");
    write_rates_csv(&rows, &path).unwrap();
    let back = parse_rates_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, rows);
    assert!((back[0].slope - 2.0).abs() < 1e-12);
}

#[test]
fn config_files_load_and_reject_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"pitch": {"t_slab": 0.05, "speed": {"kind": "constant", "speed": 2.0}}, "stages": 2}"#).unwrap();
    let c: SolveConfig = load_config(&path).unwrap();
    assert_eq!(c.pitch.t_slab, 0.05);
    assert_eq!(c.pitch.speed, SpeedBound::Constant { speed: 2.0 });
    assert_eq!(c.stages, Some(2));
    std::fs::write(&path, r#"{"pitch": {"t_slab": 0.05, "slab": 1}}"#).unwrap();
    assert!(load_config::<SolveConfig>(&path).is_err());
    // the wind tunnel defaults survive a JSON round trip
    let w = WindTunnel::default();
    let text = serde_json::to_string(&w).unwrap();
    assert_eq!(tentkit::config::parse_config::<WindTunnel>(&text).unwrap(), w);
}

proptest! {
    #[test]
    fn rate_numbers_parse_back_bit_exactly(h in 1e-6..1.0f64, e in 1e-300..1e3f64, slope in -10.0..10.0f64, p in 1usize..8) {
        let rows = vec![RateRow { p, h, e, slope }];
        let back = parse_rates_csv(&rates_csv(&rows)).unwrap();
        prop_assert_eq!(back[0].h.to_bits(), h.to_bits());
        prop_assert_eq!(back[0].e.to_bits(), e.to_bits());
        prop_assert_eq!(back[0].slope.to_bits(), slope.to_bits());
    }

    #[test]
    fn vtk_values_round_trip(vals in proptest::collection::vec(-1e6..1e6f64, 4)) {
        let mesh = SpatialMesh::structured_square(0).unwrap();
        let snap = FieldSnapshot::new(1.5, &mesh).unwrap().with_point("v", FieldValues::Scalar(vals.clone())).unwrap();
        let back = parse_vtk(&vtk_string(&snap)).unwrap();
        prop_assert_eq!(&back.point_data[0].values, &FieldValues::Scalar(vals));
    }
}

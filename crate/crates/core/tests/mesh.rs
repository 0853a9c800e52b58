use proptest::prelude::*;
use tentkit::mesh::{BoundaryTag, MeshError, SpatialMesh};

#[test]
fn structured_counts() {
    let m = SpatialMesh::structured_square(0).unwrap();
    assert_eq!((m.num_elements(), m.num_vertices(), m.num_edges()), (2, 4, 5));
    let m = SpatialMesh::structured_square(1).unwrap();
    assert_eq!((m.num_elements(), m.num_vertices(), m.num_edges()), (8, 9, 16));
    // Euler characteristic of a disc
    assert_eq!(m.num_vertices() as i64 - m.num_edges() as i64 + m.num_elements() as i64, 1);
    let m = SpatialMesh::structured_square(3).unwrap();
    assert_eq!(m.num_elements(), 128);
    let h = (0..m.num_edges()).map(|i| m.edge_length(i)).fold(f64::INFINITY, f64::min);
    assert_eq!(h, 0.125);
}

#[test]
fn adjacency_is_consistent() {
    for m in [SpatialMesh::structured_square(3).unwrap(), SpatialMesh::step_channel(0.2, 0.05).unwrap()] {
        for e in 0..m.num_elements() {
            for &i in &m.element_edges(e) {
                let (a, b) = m.edge_elements(i);
                assert!(a == e || b == Some(e));
                let [v, w] = m.edge(i);
                assert!(m.element(e).contains(&v) && m.element(e).contains(&w));
            }
            for &v in &m.element(e) {
                assert!(m.vertex_elements(v).contains(&e));
            }
        }
        for i in 0..m.num_edges() {
            assert_eq!(m.is_boundary_edge(i), m.edge_elements(i).1.is_none());
            assert_eq!(m.is_boundary_edge(i), m.edge_tag(i).is_some());
        }
    }
}

#[test]
fn step_channel_geometry() {
    let m = SpatialMesh::step_channel(0.2, 0.05).unwrap();
    assert!((m.total_area() - 2.52).abs() < 1e-12);
    assert!((0..m.num_elements()).all(|e| m.element_area(e) > 0.0));
    // each boundary facet carries exactly one tag
    let facets = m.boundary_facets();
    let boundary_edges = (0..m.num_edges()).filter(|&i| m.is_boundary_edge(i)).count();
    assert_eq!(facets.len(), boundary_edges);
    for &(i, tag) in facets {
        let [a, b] = m.edge(i);
        let (p, q) = (m.vertex(a), m.vertex(b));
        let expected = if p[0] == 0.0 && q[0] == 0.0 {
            BoundaryTag::Inflow
        } else if p[0] == 3.0 && q[0] == 3.0 {
            BoundaryTag::Outflow
        } else {
            BoundaryTag::Reflect
        };
        assert_eq!(tag, expected, "edge {p:?}-{q:?}");
    }
    // the corner refinement makes elements near the step corner smaller
    let corner = [0.6, 0.2];
    let near = |e: usize| {
        let c = m.element_centroid(e);
        ((c[0] - corner[0]).powi(2) + (c[1] - corner[1]).powi(2)).sqrt() < 0.1
    };
    let small = (0..m.num_elements()).filter(|&e| near(e)).map(|e| m.element_diameter(e)).fold(0.0, f64::max);
    let large = (0..m.num_elements()).map(|e| m.element_diameter(e)).fold(0.0, f64::max);
    assert!(small < 0.5 * large);
}

#[test]
fn desk_scale_step_channel_has_about_six_hundred_elements() {
    let cfg = tentkit::driver::WindTunnel::default();
    let m = SpatialMesh::step_channel(cfg.h_target, cfg.h_corner).unwrap();
    assert!((500..=700).contains(&m.num_elements()), "{}", m.num_elements());
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for m in [SpatialMesh::structured_square(1).unwrap(), SpatialMesh::step_channel(0.3, 0.1).unwrap()] {
        let path = dir.path().join("mesh.txt");
        m.save(&path).unwrap();
        assert_eq!(SpatialMesh::load(&path).unwrap(), m);
    }
}

#[test]
fn invalid_files() {
    let good = SpatialMesh::structured_square(0).unwrap().to_text();
    // duplicate the first element line
    let lines: Vec<&str> = good.lines().collect();
    let first_elem = lines.iter().position(|l| l.starts_with("elements")).unwrap() + 1;
    let mut dup: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    dup.insert(first_elem, lines[first_elem].to_string());
    let dup = dup.join("\n").replace("elements 2", "elements 3");
    assert!(SpatialMesh::parse(&dup).is_err());
    assert!(matches!(SpatialMesh::parse("nonsense"), Err(MeshError::Parse { .. })));
}

#[test]
fn clockwise_input_is_reoriented() {
    let m = SpatialMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 2, 1]], &[]).unwrap();
    assert!((m.element_area(0) - 0.5).abs() < 1e-15);
}

#[test]
fn vertex_patches() {
    let m = SpatialMesh::structured_square(1).unwrap();
    let at = |p: [f64; 2]| m.vertices().iter().position(|&v| v == p).unwrap();
    // brute-force scan of element lists
    let count = |v: usize| m.elements().iter().filter(|el| el.contains(&v)).count();
    for v in 0..m.num_vertices() {
        assert_eq!(m.vertex_patch(v).unwrap().elements.len(), count(v));
    }
    // positively sloped diagonals pass through the origin but not (1, 0)
    assert_eq!(count(at([0.0, 0.0])), 2);
    assert_eq!(count(at([1.0, 0.0])), 1);
    let center = at([0.5, 0.5]);
    assert_eq!(m.vertex_patch(center).unwrap().elements.len(), 6);
    assert_eq!(m.vertex_patch(center).unwrap().vertices[0], center);
}

#[test]
fn minimum_angle_of_right_triangles() {
    let q = SpatialMesh::structured_square(0).unwrap().quality();
    assert!((q.min_angle - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
}

proptest! {
    #[test]
    fn structured_levels_follow_closed_forms(l in 0u32..6) {
        let m = SpatialMesh::structured_square(l).unwrap();
        let n = 1usize << l;
        prop_assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
        prop_assert_eq!(m.num_elements(), 2 * n * n);
        prop_assert_eq!(m.num_edges(), 3 * n * n + 2 * n);
        prop_assert!((m.total_area() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn text_form_round_trips(l in 0u32..4) {
        let m = SpatialMesh::structured_square(l).unwrap();
        prop_assert_eq!(SpatialMesh::parse(&m.to_text()).unwrap(), m);
    }
}

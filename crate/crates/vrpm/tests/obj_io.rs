use proptest::prelude::*;
use vrpm::obj::{load_obj, save_obj, save_raw_obj, ObjError};
use vrpm_core::grid::quantize_with;
use vrpm_core::{normalize_quantize, shapes, GridSpec, HalfEdgeMesh};

fn reload(mesh: &HalfEdgeMesh, grid: &GridSpec) -> HalfEdgeMesh {
    let obj = load_obj(&save_obj(mesh, grid)).unwrap();
    assert_eq!(obj.ignored, 0);
    quantize_with(&obj.mesh, grid).unwrap()
}

#[test]
fn grid_fixtures_survive_save_and_load() {
    let grid = GridSpec::unit(128);
    for mesh in [
        shapes::tetrahedron(),
        shapes::pyramid().0,
        shapes::tetra_from_pyramid(),
    ] {
        let back = reload(&mesh, &grid);
        assert!(back.same_geometry(&mesh));
    }
}

#[test]
fn float_meshes_survive_a_raw_round_trip() {
    for (name, raw) in shapes::corpus(3).iter().step_by(9) {
        let back = load_obj(&save_raw_obj(raw)).unwrap().mesh;
        assert_eq!(&back, raw, "{name}");
    }
}

#[test]
fn polygons_and_errors() {
    let hex = b"v 0 0 0\nv 2 0 0\nv 3 1 0\nv 2 2 0\nv 0 2 0\nv -1 1 0\nf 1 2 3 4 5 6\n";
    let obj = load_obj(hex).unwrap();
    assert_eq!(
        obj.mesh.faces,
        vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5]]
    );
    assert!(matches!(
        load_obj(b"v 0 0 0\nf 0 1 1\n"),
        Err(ObjError::Index {
            line: 2,
            index: 0,
            ..
        })
    ));
    assert!(matches!(
        load_obj(b"v 0 0 0\nv 0 0 1\nv 0 1 1\nf 1 2 -4\n"),
        Err(ObjError::Index {
            line: 4,
            index: -4,
            ..
        })
    ));
    let err = load_obj(b"v 0 0\n").unwrap_err();
    assert_eq!(err.to_string(), "line 1: vertex needs three coordinates");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quantized_meshes_round_trip(index in 0usize..105, n_bins in prop::sample::select(vec![16u32, 64, 128, 255, 1024])) {
        let corpus = shapes::corpus(11);
        let (mesh, grid) = match normalize_quantize(&corpus[index].1, n_bins) {
            Ok(q) => q,
            // Coarse grids can weld a mesh into a non-manifold one.
            Err(_) => return Ok(()),
        };
        let back = reload(&mesh, &grid);
        prop_assert!(back.same_geometry(&mesh));
    }
}

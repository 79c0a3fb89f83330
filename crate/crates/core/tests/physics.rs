use hschur::efie::{assemble_dense, excitation_vector, monostatic_rcs, Medium, PlaneWave, Polarization, QuadratureRule};
use hschur::geom::Vec3;
use hschur::linalg::{DenseLu, C64};
use hschur::mesh::{build_rwg, generate_sphere, wavelength};
use hschur::mie::pec_backscatter;

/// Backscatter (dBsm) of a dense EFIE solve on an icosphere, and the Mie value
/// for the sphere with the same surface area as the faceted mesh.
fn sphere_backscatter(radius_wl: f64, level: u32) -> (f64, f64, f64) {
    let f = 300e6;
    let mesh = generate_sphere(radius_wl, level, f).unwrap();
    let basis = build_rwg(&mesh).unwrap();
    let medium = Medium::vacuum(f).unwrap();
    let z = assemble_dense(&basis, &medium, 6000).unwrap();
    let lu = DenseLu::new(z.as_ref()).unwrap();

    let rule = QuadratureRule::field_default();
    let wave = PlaneWave::arriving_from(0.0, 0.0, Polarization::Theta, C64::new(1.0, 0.0));
    let mut x = excitation_vector(&basis, &wave, &medium, &rule);
    lu.solve_vec_in_place(&mut x);
    let dir = Vec3::from_spherical(0.0, 0.0);
    let got = monostatic_rcs(&[x], &basis, &medium, &[dir], 1.0, &rule).unwrap()[0];

    let a = radius_wl * wavelength(f);
    let a_area = (mesh.total_area() / (4.0 * std::f64::consts::PI)).sqrt();
    let mie = |r: f64| 10.0 * pec_backscatter(r, medium.k).log10();
    (got, mie(a), mie(a_area))
}

#[test]
fn faceted_sphere_matches_mie_for_equal_area() {
    let (got, _, mie_area) = sphere_backscatter(0.5, 3);
    assert!((got - mie_area).abs() < 0.1, "{got} vs {mie_area}");
}

#[test]
fn sphere_error_shrinks_under_refinement() {
    let (coarse, mie, _) = sphere_backscatter(0.3, 2);
    let (fine, _, _) = sphere_backscatter(0.3, 3);
    assert!((fine - mie).abs() < (coarse - mie).abs());
    assert!((fine - mie).abs() < 0.5);
}

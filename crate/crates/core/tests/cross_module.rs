use proptest::prelude::*;
use zspec::hgroup::build_htype;
use zspec::intertwine::galerkin_spectrum;
use zspec::kernels::{partition, KernelKind, KernelParams};
use zspec::special::binomial;
use zspec::zeeman::{spectrum, zone_multiplicity, ConstantMode, Multiplicity, ZoneSelector};
use zspec::zones::build_zone_basis;

#[test]
fn spectrum_multiplicities_count_zone_basis() {
    for k in [2usize, 4] {
        for a in 0..=2usize {
            let basis = build_zone_basis::<f64>(a, k, 1.0, a + 4).unwrap();
            let table =
                spectrum(ZoneSelector::Gross(a), k, 1.0, (4.0 * 4.0 + k as f64) + 0.5, false, ConstantMode::Derived)
                    .unwrap();
            assert_eq!(table.lines.len(), 5);
            for line in &table.lines {
                let Multiplicity::Finite(m) = line.mult else { panic!("zone levels are finite") };
                assert_eq!(basis.count_at_level(line.p) as u64, m, "k={k} a={a} p={}", line.p);
            }
        }
    }
}

#[test]
fn global_spectrum_is_divergent() {
    let table = spectrum(ZoneSelector::Global, 2, 1.0, 10.0, false, ConstantMode::Derived).unwrap();
    assert!(table.lines.iter().all(|l| l.mult == Multiplicity::Divergent));
}

#[test]
fn galerkin_levels_carry_landau_multiplicities() {
    // Box_γ on H_1^(2,0) with λ = π|Z| = 1: k = 4, two complex coordinates.
    let space = build_htype::<f64>(1, 2, 0).unwrap();
    let z = [1.0 / std::f64::consts::PI];
    let d = 4;
    let spec = galerkin_spectrum(&space, &z, d).unwrap();
    let n = 2u64;
    for p in 0..=d {
        let level = -((4 * p + 4) as f64) - 4.0;
        let found = spec.eigenvalues.iter().filter(|e| (**e - level).abs() < 1e-8).count() as u64;
        let expected: u64 = (0..=d - p).map(|a| zone_multiplicity(a, p, 4)).sum();
        assert_eq!(found, expected, "level p={p}");
        assert_eq!(
            expected,
            (0..=(d - p) as u64).map(|a| binomial(p as u64 + n - 1, p as u64) * binomial(a + n - 1, a)).sum::<u64>()
        );
    }
    assert_eq!(spec.eigenvalues.len(), binomial(d as u64 + 4, 4) as usize);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_is_the_spectral_sum(t in 0.3f64..2.5, lambda in 0.4f64..2.0, a in 0usize..3, half_k in 1usize..3) {
        let k = 2 * half_k;
        let params = KernelParams::single(k, lambda, KernelKind::Wk, ZoneSelector::Gross(a)).unwrap();
        let z = partition(KernelKind::Wk, a, &params, t).unwrap().re;
        let e_max = 60.0 / t + 4.0 * k as f64 * lambda;
        let table = spectrum(ZoneSelector::Gross(a), k, lambda, e_max, false, ConstantMode::Derived).unwrap();
        let sum: f64 = table
            .lines
            .iter()
            .map(|l| {
                let Multiplicity::Finite(m) = l.mult else { unreachable!() };
                m as f64 * (0.5 * t * l.e).exp()
            })
            .sum();
        prop_assert!((z - sum).abs() < 1e-10 * z, "Z={z} sum={sum}");
    }
}

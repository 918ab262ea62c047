//! Regenerate the shipped geometry file (assets/arrays.toml) from its
//! recorded seeds and hand-specified layouts. Output goes to stdout.

use hybeam::geometry::{nominal_array0, perturb, GeometrySet, MicArray};
use hybeam::harness::seeded_rng;

fn main() {
    let base = nominal_array0();
    let mut arrays = vec![base.clone()];

    let small = [("0a", 1u64), ("0b", 2), ("0c", 3)];
    let large = [("0d", 4u64), ("0e", 5), ("0f", 6)];
    for (name, seed) in small {
        let mut rng = seeded_rng(seed, "perturb", 0);
        let mut a = perturb(&base, (5.0, 10.0), &mut rng).with_name(name);
        a.perturbation.as_mut().unwrap().seed = seed;
        arrays.push(a);
    }
    for (name, seed) in large {
        let mut rng = seeded_rng(seed, "perturb", 0);
        let mut a = perturb(&base, (20.0, 40.0), &mut rng).with_name(name);
        a.perturbation.as_mut().unwrap().seed = seed;
        arrays.push(a);
    }

    // Alternative wearable layouts, not derived from Array 0.
    let alt = [
        ("1", vec![[70.0, 75.0, 0.0], [70.0, -75.0, 0.0], [-70.0, 75.0, -5.0], [-70.0, -75.0, -5.0]]),
        ("2", vec![[80.0, 70.0, 0.0], [30.0, 70.0, -2.0], [-20.0, 70.0, -4.0], [-70.0, 70.0, -6.0]]),
        ("3", vec![[75.0, 0.0, 0.0], [0.0, 80.0, -5.0], [0.0, -80.0, -5.0], [-75.0, 0.0, -8.0]]),
        ("4", vec![[40.0, 40.0, -2.0], [40.0, -40.0, -2.0], [-40.0, 40.0, -2.0], [-40.0, -40.0, -2.0]]),
    ];
    for (name, mics_mm) in alt {
        arrays.push(MicArray {
            name: name.into(),
            mics_mm,
            forward_axis: [1.0, 0.0, 0.0],
            perturbation: None,
        });
    }

    let set = GeometrySet { version: 1, arrays };
    set.validate().expect("generated geometry validates");
    print!("{}", set.to_toml());
}

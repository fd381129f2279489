//! erf / erfc against a 50-point table evaluated at 40 significant digits
//! with an arbitrary-precision library, frozen here.

#![allow(clippy::excessive_precision)]

use metaplot::numeric::{erf, erfc, std_normal_cdf, std_normal_sf};

#[rustfmt::skip]
const TABLE: [(f64, f64, f64); 50] = [
    (-6.0, -0.99999999999999997848, 1.9999999999999999785),
    (-5.755102040816326, -0.99999999999999960126, 1.9999999999999996013),
    (-5.510204081632653, -0.99999999999999343586, 1.9999999999999934359),
    (-5.26530612244898, -0.99999999999990398185, 1.9999999999999039819),
    (-5.020408163265306, -0.99999999999875179285, 1.9999999999987517929),
    (-4.775510204081632, -0.99999999998557703256, 1.9999999999855770326),
    (-4.530612244897959, -0.99999999985183543012, 1.9999999998518354301),
    (-4.285714285714286, -0.99999999864650875271, 1.9999999986465087527),
    (-4.040816326530612, -0.99999998900229199493, 1.9999999890022919949),
    (-3.795918367346939, -0.99999992049095773293, 1.9999999204909577329),
    (-3.5510204081632653, -0.99999948837504729566, 1.9999994883750472957),
    (-3.306122448979592, -0.99999706852031909922, 1.9999970685203190992),
    (-3.061224489795918, -0.99998503651354251911, 1.9999850365135425191),
    (-2.816326530612245, -0.99993191691828060874, 1.9999319169182806087),
    (-2.5714285714285716, -0.9997236850716134245, 1.9997236850716134245),
    (-2.326530612244898, -0.99899887770326483886, 1.9989988777032648389),
    (-2.0816326530612246, -0.99675867158256044177, 1.9967586715825604418),
    (-1.8367346938775508, -0.99061044806916481464, 1.9906104480691648146),
    (-1.591836734693878, -0.97562694345292507186, 1.9756269434529250719),
    (-1.3469387755102042, -0.94320160888001228573, 1.9432016088800122857),
    (-1.1020408163265305, -0.88089022242932659439, 1.8808902224293265944),
    (-0.8571428571428568, -0.7745576830054867495, 1.7745576830054867495),
    (-0.6122448979591839, -0.61342485306823359994, 1.6134248530682335999),
    (-0.36734693877551017, -0.39659278322805912881, 1.3965927832280591288),
    (-0.12244897959183643, -0.13748141610141311078, 1.1374814161014131108),
    (0.12244897959183643, 0.13748141610141311078, 0.86251858389858688922),
    (0.36734693877551017, 0.39659278322805912881, 0.60340721677194087119),
    (0.6122448979591839, 0.61342485306823359994, 0.38657514693176640006),
    (0.8571428571428568, 0.7745576830054867495, 0.2254423169945132505),
    (1.1020408163265305, 0.88089022242932659439, 0.11910977757067340561),
    (1.3469387755102042, 0.94320160888001228573, 0.056798391119987714273),
    (1.591836734693878, 0.97562694345292507186, 0.024373056547074928138),
    (1.8367346938775508, 0.99061044806916481464, 0.009389551930835185361),
    (2.0816326530612237, 0.99675867158256042861, 0.0032413284174395713892),
    (2.3265306122448983, 0.9989988777032648411, 0.0010011222967351589019),
    (2.571428571428571, 0.99972368507161342382, 0.00027631492838657617698),
    (2.816326530612244, 0.99993191691828060838, 0.000068083081719391620141),
    (3.0612244897959187, 0.99998503651354251915, 0.000014963486457480846649),
    (3.3061224489795915, 0.99999706852031909922, 2.9314796809007847946e-6),
    (3.551020408163266, 0.99999948837504729567, 5.1162495270433347934e-7),
    (3.795918367346939, 0.99999992049095773293, 7.9509042267067099275e-8),
    (4.040816326530612, 0.99999998900229199493, 1.0997708005065769429e-8),
    (4.2857142857142865, 0.99999999864650875271, 1.3534912472915750405e-9),
    (4.530612244897959, 0.99999999985183543012, 1.4816456988241203075e-10),
    (4.775510204081632, 0.99999999998557703256, 1.4422967437666907754e-11),
    (5.020408163265307, 0.99999999999875179285, 1.2482071492899598371e-12),
    (5.26530612244898, 0.99999999999990398185, 9.6018145599415567138e-14),
    (5.5102040816326525, 0.99999999999999343586, 6.5641403060648039943e-15),
    (5.755102040816327, 0.99999999999999960126, 3.9874244979148363991e-16),
    (6.0, 0.99999999999999997848, 2.1519736712498913117e-17),
];

#[test]
fn erf_within_1e12_of_reference() {
    for &(x, want, _) in &TABLE {
        let got = erf(x).unwrap();
        assert!((got - want).abs() <= 1e-12, "erf({x}) = {got}, want {want}");
    }
}

#[test]
fn erfc_relative_accuracy_in_the_tail() {
    for &(x, _, want) in &TABLE {
        let got = erfc(x).unwrap();
        let rel = ((got - want) / want).abs();
        assert!(rel <= 1e-13, "erfc({x}) = {got}, want {want} (rel {rel:e})");
    }
}

#[test]
fn normal_tails_follow_from_erfc() {
    for &(x, _, c) in &TABLE {
        // sf(x * sqrt 2) = erfc(x) / 2
        let t = x * std::f64::consts::SQRT_2;
        let sf = std_normal_sf(t).unwrap().value();
        assert!(((sf - c / 2.0) / (c / 2.0)).abs() <= 1e-12, "sf({t})");
        let cdf = std_normal_cdf(t).unwrap().value();
        assert!((cdf - (1.0 - c / 2.0)).abs() <= 1e-14);
    }
}

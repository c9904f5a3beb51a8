//! Prints the brute-force calibration of the enstrophy-inequality constant.

fn main() {
    let cal = bulb_core::verify::calibrate_c0(1000, 16, 5, 2024).expect("calibration");
    println!("{cal:#?}");
}

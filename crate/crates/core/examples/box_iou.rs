//! Exact 3D IoU between oriented boxes.

use std::f64::consts::FRAC_PI_4;

use roadside3d::geometry::{intersection_volume, iou3d, Box3D, ConvexPolytope};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Box3D::cube([0.0, 0.0, 0.0], 2.0)?;
    let b = Box3D::cube([1.0, 0.0, 0.0], 2.0)?;
    println!("unit shift along x: IoU = {:.6} (exact 1/3)", iou3d(&a, &b));

    let car = Box3D::from_parts([2.0, 1.2, 25.0], [1.5, 1.8, 4.3], [0.2, 0.0, 0.0])?;
    for yaw in [0.2, 0.2 + FRAC_PI_4 / 2.0, 0.2 + FRAC_PI_4] {
        let det = Box3D::from_parts([2.3, 1.2, 25.4], [1.5, 1.8, 4.3], [yaw, 0.0, 0.0])?;
        println!(
            "yaw {:.3}: overlap {:.4} m^3, IoU {:.4}",
            yaw,
            intersection_volume(&car, &det),
            iou3d(&car, &det)
        );
    }

    // pitch and roll take part as well
    let tilted = Box3D::from_parts([2.0, 1.2, 25.0], [1.5, 1.8, 4.3], [0.2, 0.1, -0.05])?;
    println!("tilted copy: IoU {:.4}", iou3d(&car, &tilted));

    let cell = ConvexPolytope::from_box(&car).clip(&nalgebra::Vector3::z(), 25.0);
    println!(
        "half of the car behind z = 25: {:.4} m^3 of {:.4}",
        cell.volume(),
        car.volume()
    );
    Ok(())
}

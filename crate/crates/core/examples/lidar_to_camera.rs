//! Import LiDAR-frame boxes into the camera frame and project them.

use nalgebra::Vector3;
use roadside3d::camera::{
    import_lidar_box, lidar_to_camera_axes, project_box, Intrinsics, LidarBox, RigidTransform,
};
use roadside3d::geometry::{iou3d, try_rotation_from_euler, Dimensions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // pole-mounted camera 7 m up, tilted 30 degrees toward the road
    let tilt = try_rotation_from_euler(0.0, 30f64.to_radians(), 0.0)?;
    let rotation = tilt.compose(&lidar_to_camera_axes());
    let translation = -rotation.apply(&Vector3::new(0.0, 0.0, 7.0));
    let extrinsics = RigidTransform::new(rotation, translation, "lidar", "camera")?;
    let k = Intrinsics::from_fov(1920, 1080, 90.0)?;

    let cars = [
        LidarBox::new([20.0, 0.0, 0.75], Dimensions::new(1.5, 1.8, 4.2)?, 0.0)?,
        LidarBox::new([22.0, 1.0, 0.75], Dimensions::new(1.5, 1.8, 4.2)?, 0.4)?,
        LidarBox::new([45.0, -6.0, 1.6], Dimensions::new(3.2, 2.5, 11.0)?, 1.2)?,
    ];
    // imported boxes already live in the camera frame
    let cam = RigidTransform::identity("object", "camera")?;
    let mut imported = Vec::new();
    for (i, lb) in cars.iter().enumerate() {
        let b = import_lidar_box(&extrinsics, "lidar", lb)?;
        let e = b.orientation;
        println!(
            "box {i}: center ({:.2}, {:.2}, {:.2}) ypr ({:.3}, {:.3}, {:.3})",
            b.center.x, b.center.y, b.center.z, e.yaw, e.pitch, e.roll
        );
        let proj = project_box(&k, &cam, &b);
        match proj.rect {
            Some(r) => println!(
                "       2D [{:.1}, {:.1}, {:.1}, {:.1}] height {:.1} px truncation {:.2}",
                r.x1,
                r.y1,
                r.x2,
                r.y2,
                proj.height(),
                proj.truncation()
            ),
            None => println!("       not visible"),
        }
        imported.push((lb.to_box3d(), b));
    }
    // rigid motion keeps overlaps
    let (l0, c0) = &imported[0];
    let (l1, c1) = &imported[1];
    println!("IoU lidar {:.6} camera {:.6}", iou3d(l0, l1), iou3d(c0, c1));
    Ok(())
}

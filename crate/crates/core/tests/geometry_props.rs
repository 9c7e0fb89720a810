use bco_core::geometry::ConvexBody;
use bco_core::{Point, MEMBERSHIP_TOL};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn bodies(d: usize) -> Vec<ConvexBody> {
    let mut a = DMatrix::<f64>::identity(d, d);
    for i in 0..d {
        a[(i, i)] = 0.5 + i as f64;
        if i + 1 < d {
            a[(i, i + 1)] = 0.2;
            a[(i + 1, i)] = 0.2;
        }
    }
    let mut shear = DMatrix::<f64>::identity(d, d);
    if d > 1 {
        shear[(0, 1)] = 0.7;
    }
    shear[(0, 0)] = 2.0;
    let cube = ConvexBody::cube(d, 1.0).unwrap();
    vec![
        ConvexBody::ball(d, 1.5).unwrap(),
        ConvexBody::cuboid(Point::from_fn(d, |i, _| 0.5 + i as f64)).unwrap(),
        ConvexBody::simplex(d).unwrap(),
        ConvexBody::ellipsoid(a).unwrap(),
        ConvexBody::affine(shear, Point::zeros(d), &cube).unwrap(),
    ]
}

fn vector(d: usize, scale: f64) -> impl Strategy<Value = Point> {
    prop::collection::vec(-scale..scale, d).prop_map(Point::from_vec)
}

fn unit(d: usize) -> impl Strategy<Value = Point> {
    vector(d, 1.0).prop_filter_map("zero", |v| {
        let n = v.norm();
        (n > 1e-3).then(|| v / n)
    })
}

fn case() -> impl Strategy<Value = (usize, usize, Point, Point)> {
    (1usize..=4, 0usize..5)
        .prop_flat_map(|(d, shape)| (Just(d), Just(shape), vector(d, 6.0), vector(d, 6.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn projection_is_idempotent_feasible_and_nonexpansive((d, shape, x, y) in case()) {
        let body = &bodies(d)[shape];
        let px = body.project(&x).unwrap();
        let py = body.project(&y).unwrap();
        prop_assert!(body.contains(&px, MEMBERSHIP_TOL));
        prop_assert!((body.project(&px).unwrap() - &px).norm() <= 1e-8);
        prop_assert!((&px - &py).norm() <= (&x - &y).norm() + 1e-8);
    }

    #[test]
    fn projection_satisfies_the_obtuse_angle_condition((d, shape, x, z) in case()) {
        let body = &bodies(d)[shape];
        let px = body.project(&x).unwrap();
        let feasible = body.project(&z).unwrap();
        let scale = 1.0 + x.norm() + z.norm();
        prop_assert!((&x - &px).dot(&(&feasible - &px)) <= 1e-7 * scale * scale);
    }

    #[test]
    fn declared_radii_are_sound((d, shape, _x, _y) in case(), v in unit(4)) {
        let body = &bodies(d)[shape];
        let v = Point::from_iterator(d, v.iter().copied().take(d));
        prop_assume!(v.norm() > 1e-3);
        let v = &v / v.norm();
        let (r, big_r) = body.radii();
        prop_assert!(body.contains(&(&v * r), MEMBERSHIP_TOL));
        let far = body.project(&(&v * (10.0 * big_r))).unwrap();
        prop_assert!(far.norm() <= big_r + 1e-8);
    }

    #[test]
    fn shrunk_points_keep_a_ball_inside(
        (d, shape, x, _y) in case(),
        alpha in 0.01f64..0.99,
        v in unit(4),
    ) {
        let body = &bodies(d)[shape];
        let shrunk = body.shrink(alpha).unwrap();
        let inner = shrunk.project(&x).unwrap();
        let v = Point::from_iterator(d, v.iter().copied().take(d));
        prop_assume!(v.norm() > 1e-3);
        let v = &v / v.norm();
        let (r, _) = body.radii();
        prop_assert!(body.contains(&(inner + v * (alpha * r)), MEMBERSHIP_TOL));
    }
}

#[test]
fn membership_rejects_wrong_dimension() {
    for body in bodies(3) {
        assert!(body.membership(&Point::zeros(2)).is_err());
        assert!(body.project(&Point::zeros(4)).is_err());
    }
}

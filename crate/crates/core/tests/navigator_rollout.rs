//! Controller rollouts checked against a point-in-free-space probe every
//! tick.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saegt::geometry::{FreeSpaceModel, GeometryParams};
use saegt::grid::{CellSet, Grid, Point};
use saegt::navigator::{drive, local_free_space, step, NavigatorParams, RobotState};

fn random_model(rng: &mut ChaCha8Rng) -> (Grid, CellSet, FreeSpaceModel) {
    let grid = Grid::new(30, 30, 1.0, Point::default()).unwrap();
    let mut cells = Vec::new();
    let mut c = Point::new(15.0, 15.0);
    for _ in 0..6 {
        cells.extend(grid.disk(c, rng.random_range(2.0..5.0)));
        c = Point::new(
            (c.x + rng.random_range(-5.0..5.0)).clamp(3.0, 27.0),
            (c.y + rng.random_range(-5.0..5.0)).clamp(3.0, 27.0),
        );
    }
    let safe = CellSet::from_indices(grid.len(), cells);
    let model = FreeSpaceModel::build(&safe, &grid, &GeometryParams::default()).unwrap();
    (grid, safe, model)
}

#[test]
fn local_region_stays_in_free_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let (grid, safe, model) = random_model(&mut rng);
        for cell in safe.iter().step_by(7) {
            let robot = RobotState { position: grid.cell_center(cell), max_step: 0.5 };
            let lfs = local_free_space(&robot, &model, 5.0, 0.25, 32).unwrap();
            assert!(lfs.region.is_ccw());
            assert!(lfs.region.contains(robot.position));
            for v in &lfs.region.vertices {
                assert!(model.contains(*v), "vertex {v} escapes the free space");
            }
            for _ in 0..20 {
                let t = rng.random::<f64>();
                let e = rng.random_range(0..lfs.region.len());
                let a = lfs.region.vertices[e];
                let b = lfs.region.vertices[(e + 1) % lfs.region.len()];
                let p = robot.position + ((a + (b - a) * t) - robot.position) * rng.random::<f64>();
                assert!(model.contains(p));
            }
        }
    }
}

#[test]
fn rollouts_never_leave_free_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let params = NavigatorParams { max_ticks: 400, ..NavigatorParams::default() };
    for _ in 0..100 {
        let (grid, safe, model) = random_model(&mut rng);
        let cells: Vec<usize> = safe.iter().collect();
        let mut robot = RobotState { position: grid.cell_center(cells[0]), max_step: 0.5 };
        for _ in 0..5 {
            let goal = grid.cell_center(cells[rng.random_range(0..cells.len())]);
            let mut last = robot.position;
            drive(&mut robot, &[goal], &model, &params, 1.0, |tick| {
                assert!(tick.contained, "left free space at {} heading for {goal}", tick.position);
                assert!(model.contains(tick.position));
                assert!(tick.position.dist(last) <= 0.5 + 1e-12);
                last = tick.position;
            })
            .unwrap();
        }
    }
}

#[test]
fn open_segment_makes_steady_progress() {
    let grid = Grid::new(20, 20, 1.0, Point::default()).unwrap();
    let model = FreeSpaceModel::build(&CellSet::full(grid.len()), &grid, &GeometryParams::default()).unwrap();
    let goal = Point::new(15.5, 12.0);
    let mut robot = RobotState { position: Point::new(3.0, 4.0), max_step: 0.5 };
    for _ in 0..200 {
        if robot.position == goal {
            break;
        }
        let before = robot.position.dist(goal);
        let lfs = local_free_space(&robot, &model, 5.0, 0.25, 32).unwrap();
        robot = step(&robot, goal, &lfs);
        assert!(robot.position.dist(goal) < before);
    }
    assert_eq!(robot.position, goal);
}

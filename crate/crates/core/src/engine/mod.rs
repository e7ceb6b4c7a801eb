//! Geodesics in Voronoi domains.
mod ball;
mod connect;
mod path;
mod shoot;

pub use ball::{is_convex_polygon, trace_ball, BallSample, QhBall, MAX_BALL_SAMPLES, MIN_BALL_SAMPLES};
pub use connect::{
    connect, connect_with, polyline_upper_bound, qh_distance, ConnectOptions, ConnectResult, Solution, CLUSTER_TOL,
    CONNECT_RTOL, MIN_LENGTH_RTOL,
};
pub use path::{EventKind, GeodesicPath, Piece, ShootEvent};
pub use shoot::{depart, exp_map, prolong, shoot, CORNER_PROBE, MAX_PIECES, PARALLEL_TOL};

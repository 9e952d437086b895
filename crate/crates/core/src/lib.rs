//! Čech and Čech–De Rham invariants of foliation leaf spaces presented as
//! finite embedding categories of charts.

pub mod basic;
pub mod category;
pub mod cech;
pub mod chernweil;
pub mod collapse;
pub mod scenario;
pub mod symexpr;

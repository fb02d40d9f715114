#![allow(dead_code)]

pub mod dot;
pub mod gen;
pub mod hand;
pub mod oracle;

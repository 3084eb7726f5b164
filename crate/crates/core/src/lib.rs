pub mod analysis;
pub mod instance;
pub mod io;
pub mod lasserre;
pub mod oracle;
pub mod pauli;
pub mod rounding;
pub mod sdp;

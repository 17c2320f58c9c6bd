pub mod document;
pub mod fsm_source;

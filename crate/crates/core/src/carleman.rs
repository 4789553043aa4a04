//! Conjugated-operator identity audit and Carleman-inequality ratio harness.

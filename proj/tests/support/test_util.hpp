#pragma once

#include <catch_amalgamated.hpp>

#include <functional>

#include "hpsfde/error.hpp"

/// Error code thrown by fn; fails the test if nothing is thrown.
inline hpsfde::ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const hpsfde::Error& e) {
        return e.code();
    }
    FAIL("expected hpsfde::Error");
    return hpsfde::ErrorCode::InvalidArgument;
}

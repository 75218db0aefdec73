#pragma once

#include "tacseg/errors.hpp"

#include <doctest.h>

#include <string>

namespace tacseg::testing {

// Runs fn and reports whether it threw tacseg::Error with the given code.
template <class F>
bool throws_code(F&& fn, ErrorCode code) {
    try {
        fn();
    } catch (const Error& e) {
        if (e.code() == code) return true;
        MESSAGE("got " << to_string(e.code()) << ": " << e.what());
        return false;
    }
    MESSAGE("no exception");
    return false;
}

}  // namespace tacseg::testing

#define CHECK_CODE(expr, code) CHECK(::tacseg::testing::throws_code([&] { (void)(expr); }, ::tacseg::ErrorCode::code))

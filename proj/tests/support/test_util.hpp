#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "dcseg/error.hpp"

inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(DCSEG_DATA_DIR) / name;
}

template <class F>
void expect_error(dcseg::ErrorKind kind, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << dcseg::to_string(kind) << ", nothing thrown";
  } catch (const dcseg::Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

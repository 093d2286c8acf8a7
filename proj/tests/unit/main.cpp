#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "mar/core.hpp"

int main(int argc, char** argv) {
  // Warnings are asserted through explicit sinks; keep the default one quiet.
  mar::set_warning_sink([](std::string_view) {});
  doctest::Context ctx(argc, argv);
  return ctx.run();
}

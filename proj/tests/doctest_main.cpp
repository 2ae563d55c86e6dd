#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "xdifflab/log.hpp"

int main(int argc, char** argv) {
    xdl::set_warnings_enabled(false);
    doctest::Context ctx(argc, argv);
    return ctx.run();
}

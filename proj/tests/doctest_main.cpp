#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "subnyq/linalg.hpp"

int main(int argc, char** argv) {
    subnyq::init_deterministic_blas();
    return doctest::Context(argc, argv).run();
}

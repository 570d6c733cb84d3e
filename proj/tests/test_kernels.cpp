#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "taac/kernels.hpp"
#include "taac/parallel.hpp"
#include "taac/rng.hpp"
#include "taac/tensor.hpp"

using taac::Tensor;
using taac::TensorF;

namespace {

TensorF rand_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    TensorF t(std::move(shape));
    taac::Rng rng(seed);
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

// Run `body` under both backends and require bitwise-identical output.
template <class F>
void check_backend_bitwise(F&& body) {
    const auto prev = taac::backend();
    taac::set_backend(taac::Backend::OpenMp);
    const TensorF par = body();
    taac::set_backend(taac::Backend::Serial);
    const TensorF ser = body();
    taac::set_backend(prev);
    REQUIRE(par.shape == ser.shape);
    for (std::size_t i = 0; i < par.size(); ++i) {
        REQUIRE(par.data[i] == ser.data[i]);  // bitwise, no tolerance
    }
}

}  // namespace

TEST_CASE("fc_forward matches a hand-computed product") {
    // y = x W^T + b with x=[[1,2]], W=[[1,1],[0,1]], b=[1,0] -> [[4,2]]
    TensorF x({1, 2}, {1.0f, 2.0f});
    TensorF w({2, 2}, {1.0f, 1.0f, 0.0f, 1.0f});
    TensorF b({2}, {1.0f, 0.0f});
    TensorF y;
    taac::kernels::fc_forward(x, w, b, y);
    REQUIRE(y.shape == std::vector<std::size_t>{1, 2});
    CHECK(y.data[0] == 4.0f);
    CHECK(y.data[1] == 2.0f);
}

TEST_CASE("conv1d_forward matches hand-computed cross-correlations") {
    SUBCASE("kernel [1,0] slides over [1,2,3]") {
        TensorF x({1, 1, 3}, {1.0f, 2.0f, 3.0f});
        TensorF k({1, 1, 2}, {1.0f, 0.0f});
        TensorF y;
        taac::kernels::conv1d_forward(x, k, 1, 0, y);
        REQUIRE(y.shape == std::vector<std::size_t>{1, 1, 2});
        CHECK(y.data[0] == 1.0f);
        CHECK(y.data[1] == 2.0f);
    }
    SUBCASE("kernel [1,1] sums neighbours of [1,1,1]") {
        TensorF x({1, 1, 3}, {1.0f, 1.0f, 1.0f});
        TensorF k({1, 1, 2}, {1.0f, 1.0f});
        TensorF y;
        taac::kernels::conv1d_forward(x, k, 1, 0, y);
        REQUIRE(y.shape == std::vector<std::size_t>{1, 1, 2});
        CHECK(y.data[0] == 2.0f);
        CHECK(y.data[1] == 2.0f);
    }
}

TEST_CASE("conv_out_len formula and underflow guard") {
    CHECK(taac::kernels::conv_out_len(10, 3, 1, 0) == 8);
    CHECK(taac::kernels::conv_out_len(10, 3, 1, 1) == 10);
    CHECK(taac::kernels::conv_out_len(10, 3, 2, 0) == 4);
    CHECK(taac::kernels::conv_out_len(4, 4, 1, 0) == 1);
    CHECK_THROWS_AS(taac::kernels::conv_out_len(2, 5, 1, 0), taac::DimensionError);
}

TEST_CASE("production kernels are bitwise identical across backends") {
    const auto x2 = rand_tensor({5, 37}, 11);
    const auto w = rand_tensor({13, 37}, 12);
    const auto b = rand_tensor({13}, 13);
    check_backend_bitwise([&] {
        TensorF y;
        taac::kernels::fc_forward(x2, w, b, y);
        return y;
    });

    const auto dy = rand_tensor({5, 13}, 14);
    check_backend_bitwise([&] {
        TensorF dx;
        taac::kernels::fc_backward_input(dy, w, dx);
        return dx;
    });
    check_backend_bitwise([&] {
        TensorF dw({13, 37}), db({13});
        taac::kernels::fc_backward_params(x2, dy, dw, db);
        return dw;
    });

    const auto x3 = rand_tensor({3, 4, 41}, 15);
    const auto k = rand_tensor({6, 4, 5}, 16);
    check_backend_bitwise([&] {
        TensorF y;
        taac::kernels::conv1d_forward(x3, k, 1, 2, y);
        return y;
    });
    TensorF yc;
    taac::kernels::conv1d_forward(x3, k, 1, 2, yc);
    const auto dyc = rand_tensor(yc.shape, 17);
    check_backend_bitwise([&] {
        TensorF dx;
        taac::kernels::conv1d_backward_input(dyc, k, 1, 2, 41, dx);
        return dx;
    });
    check_backend_bitwise([&] {
        TensorF dk({6, 4, 5});
        taac::kernels::conv1d_backward_kernels(x3, dyc, 1, 2, dk);
        return dk;
    });
    check_backend_bitwise([&] {
        TensorF y;
        taac::kernels::avgpool1d_forward(x3, 4, y);
        return y;
    });
}

TEST_CASE("production kernels agree bitwise with the serial reference twins") {
    const auto x2 = rand_tensor({7, 29}, 21);
    const auto w = rand_tensor({11, 29}, 22);
    const auto b = rand_tensor({11}, 23);
    TensorF y_prod, y_ref;
    taac::kernels::fc_forward(x2, w, b, y_prod);
    taac::reference::fc_forward(x2, w, b, y_ref);
    REQUIRE(y_prod.shape == y_ref.shape);
    for (std::size_t i = 0; i < y_prod.size(); ++i) CHECK(y_prod.data[i] == y_ref.data[i]);

    const auto x3 = rand_tensor({4, 3, 33}, 24);
    const auto k = rand_tensor({5, 3, 7}, 25);
    TensorF c_prod, c_ref;
    taac::kernels::conv1d_forward(x3, k, 2, 3, c_prod);
    taac::reference::conv1d_forward(x3, k, 2, 3, c_ref);
    REQUIRE(c_prod.shape == c_ref.shape);
    for (std::size_t i = 0; i < c_prod.size(); ++i) CHECK(c_prod.data[i] == c_ref.data[i]);
}

TEST_CASE("avgpool forward/backward oracles") {
    // window 2 over [1,2,3,4,5]: tail sample 5 is dropped
    TensorF x({1, 1, 5}, {1.0f, 2.0f, 3.0f, 4.0f, 5.0f});
    TensorF y;
    taac::kernels::avgpool1d_forward(x, 2, y);
    REQUIRE(y.shape == std::vector<std::size_t>{1, 1, 2});
    CHECK(y.data[0] == 1.5f);
    CHECK(y.data[1] == 3.5f);

    TensorF dy({1, 1, 2}, {2.0f, 4.0f});
    TensorF dx;
    taac::kernels::avgpool1d_backward(dy, 2, 5, dx);
    REQUIRE(dx.shape == std::vector<std::size_t>{1, 1, 5});
    CHECK(dx.data[0] == 1.0f);
    CHECK(dx.data[1] == 1.0f);
    CHECK(dx.data[2] == 2.0f);
    CHECK(dx.data[3] == 2.0f);
    CHECK(dx.data[4] == 0.0f);  // dropped tail receives no gradient

    TensorF tiny({1, 1, 3});
    TensorF out;
    CHECK_THROWS_AS(taac::kernels::avgpool1d_forward(tiny, 4, out), taac::DimensionError);
}

TEST_CASE("fc shape validation") {
    TensorF x({2, 3}), w({4, 5}), b({4}), y;
    CHECK_THROWS_AS(taac::kernels::fc_forward(x, w, b, y), taac::DimensionError);
}

TEST_CASE("conv channel validation") {
    TensorF x({1, 2, 8}), k({3, 5, 3}), y;
    CHECK_THROWS_AS(taac::kernels::conv1d_forward(x, k, 1, 0, y), taac::DimensionError);
}

TEST_CASE("backward_params accumulates instead of overwriting") {
    const auto x = rand_tensor({3, 6}, 31);
    const auto dy = rand_tensor({3, 4}, 32);
    TensorF dw1({4, 6}), db1({4});
    taac::kernels::fc_backward_params(x, dy, dw1, db1);
    TensorF dw2 = dw1, db2 = db1;
    taac::kernels::fc_backward_params(x, dy, dw2, db2);
    for (std::size_t i = 0; i < dw1.size(); ++i) CHECK(dw2.data[i] == 2.0f * dw1.data[i]);
    for (std::size_t i = 0; i < db1.size(); ++i) CHECK(db2.data[i] == 2.0f * db1.data[i]);
}

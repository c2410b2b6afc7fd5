/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: tests/test_bvh.cpp
 *
 * Copyright 2026 The facejitter authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "facejitter/render/bvh.hpp"
#include "test_util.hpp"

using namespace facejitter;

namespace {

// All-triangle scan with the same tie-break rule: smallest depth, then
// smallest triangle id.
std::optional<RayHit> brute_force(const Ray& ray, const VertexSet& vertices,
                                  const std::vector<std::array<int, 3>>& triangles) {
    std::optional<RayHit> best;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto hit = intersect_triangle(
            ray, vertices.row(triangles[t][0]).transpose(), vertices.row(triangles[t][1]).transpose(),
            vertices.row(triangles[t][2]).transpose(), static_cast<int>(t));
        if (!hit) continue;
        if (!best || hit->depth < best->depth ||
            (hit->depth == best->depth && hit->triangle < best->triangle)) {
            best = hit;
        }
    }
    return best;
}

Vec3 sphere_dir(Rng& rng) {
    while (true) {
        const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const double n = p.norm();
        if (n > 1e-3 && n <= 1.0) return p / n;
    }
}

} // namespace

TEST_SUITE("bvh") {

TEST_CASE("single triangle intersection with exact barycentrics") {
    VertexSet vertices(3, 3);
    vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0;
    const std::vector<std::array<int, 3>> triangles{{0, 1, 2}};
    const TriangleBVH bvh(vertices, triangles);
    CHECK(bvh.triangle_count() == 1);
    CHECK(bvh.node_count() == 1);

    const Ray ray{Vec3(0.25, 0.25, 5.0), Vec3(0, 0, -1)};
    const auto hit = bvh.intersect(ray);
    REQUIRE(hit.has_value());
    CHECK(hit->triangle == 0);
    CHECK(hit->depth == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(hit->barycentric(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hit->barycentric(1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(hit->barycentric(2) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("boundary rays hit, reversed and parallel rays miss") {
    const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
    // Exactly through vertex a.
    CHECK(intersect_triangle({Vec3(0, 0, 2), Vec3(0, 0, -1)}, a, b, c, 7).has_value());
    // Exactly on the hypotenuse edge u + v = 1.
    CHECK(intersect_triangle({Vec3(0.5, 0.5, 2), Vec3(0, 0, -1)}, a, b, c, 7).has_value());
    // Just outside.
    CHECK(!intersect_triangle({Vec3(0.51, 0.5, 2), Vec3(0, 0, -1)}, a, b, c, 7).has_value());
    // Triangle behind the origin.
    CHECK(!intersect_triangle({Vec3(0.25, 0.25, -1), Vec3(0, 0, -1)}, a, b, c, 7).has_value());
    // Ray parallel to the plane.
    CHECK(!intersect_triangle({Vec3(0.25, 0.25, 1), Vec3(1, 0, 0)}, a, b, c, 7).has_value());
    // No culling: hit from below as well.
    const auto back = intersect_triangle({Vec3(0.25, 0.25, -3), Vec3(0, 0, 1)}, a, b, c, 7);
    REQUIRE(back.has_value());
    CHECK(back->depth == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("shared-edge hits resolve to the lowest triangle id") {
    VertexSet vertices(4, 3);
    vertices << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
    const std::vector<std::array<int, 3>> triangles{{0, 1, 2}, {0, 2, 3}};
    const TriangleBVH bvh(vertices, triangles);
    // The diagonal 0-2 is shared; a ray through its midpoint hits both.
    const auto hit = bvh.intersect({Vec3(0.5, 0.5, 4.0), Vec3(0, 0, -1)});
    REQUIRE(hit.has_value());
    CHECK(hit->triangle == 0);
    CHECK(hit->depth == doctest::Approx(4.0).epsilon(1e-12));
    // Through the shared vertex 0 as well.
    const auto corner = bvh.intersect({Vec3(0.0, 0.0, 4.0), Vec3(0, 0, -1)});
    REQUIRE(corner.has_value());
    CHECK(corner->triangle == 0);
}

TEST_CASE("tree queries equal a brute-force scan on the full head mesh") {
    const HeadTemplate head = make_head_template(); // 4992 triangles
    REQUIRE(head.topology.triangles.size() == 4992);
    const TriangleBVH bvh = build_bvh(head.base, head.topology);
    CHECK(bvh.triangle_count() == 4992);

    const Vec3 center = head.base.colwise().mean().transpose();
    Rng rng(91);
    int hits = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec3 origin = center + 400.0 * sphere_dir(rng);
        // Aim at the head half the time, wide of it otherwise.
        Vec3 aim = center + Vec3(rng.uniform(-90, 90), rng.uniform(-110, 110), rng.uniform(-90, 90));
        if (i % 2 == 1) aim += 350.0 * sphere_dir(rng);
        const Ray ray{origin, (aim - origin).normalized()};

        const auto fast = bvh.intersect(ray);
        const auto slow = brute_force(ray, head.base, head.topology.triangles);
        REQUIRE(fast.has_value() == slow.has_value());
        if (!fast) continue;
        ++hits;
        CHECK(fast->triangle == slow->triangle);
        CHECK(std::abs(fast->depth - slow->depth) <= 1e-9);
    }
    CHECK(hits > 200);
    CHECK(hits < 1000);
}

TEST_CASE("hit points reconstruct from barycentrics") {
    const HeadTemplate head = make_head_template(20, 32);
    const TriangleBVH bvh = build_bvh(head.base, head.topology);
    const Vec3 center = head.base.colwise().mean().transpose();
    Rng rng(93);
    int checked = 0;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 origin = center + 350.0 * sphere_dir(rng);
        const Vec3 aim =
            center + Vec3(rng.uniform(-80, 80), rng.uniform(-100, 100), rng.uniform(-80, 80));
        const Ray ray{origin, (aim - origin).normalized()};
        const auto hit = bvh.intersect(ray);
        if (!hit) continue;
        ++checked;
        const Vec3& bary = hit->barycentric;
        CHECK(bary(0) >= -1e-12);
        CHECK(bary(1) >= -1e-12);
        CHECK(bary(2) >= -1e-12);
        CHECK(bary.sum() == doctest::Approx(1.0).epsilon(1e-9));
        const auto& tri = head.topology.triangles[static_cast<std::size_t>(hit->triangle)];
        const Vec3 reconstructed = bary(0) * head.base.row(tri[0]).transpose() +
                                   bary(1) * head.base.row(tri[1]).transpose() +
                                   bary(2) * head.base.row(tri[2]).transpose();
        const Vec3 along = ray.origin + hit->depth * ray.direction;
        CHECK((reconstructed - along).norm() < 1e-9 * (1.0 + along.norm()));
    }
    CHECK(checked > 5000);
}

TEST_CASE("rays missing the root box test no triangles") {
    const HeadTemplate head = make_head_template(20, 32);
    const TriangleBVH bvh = build_bvh(head.base, head.topology);
    IntersectStats stats;
    const auto miss = bvh.intersect({Vec3(0, 0, 5000.0), Vec3(0, 0, 1)}, &stats);
    CHECK(!miss.has_value());
    CHECK(stats.triangle_tests == 0);
}

TEST_CASE("pruning keeps triangle tests far below the mesh size") {
    const HeadTemplate head = make_head_template();
    const TriangleBVH bvh = build_bvh(head.base, head.topology);
    const Vec3 center = head.base.colwise().mean().transpose();
    IntersectStats stats;
    const auto hit = bvh.intersect({center + Vec3(0, 0, 500.0), Vec3(0, 0, -1)}, &stats);
    REQUIRE(hit.has_value());
    CHECK(stats.triangle_tests > 0);
    CHECK(stats.triangle_tests < 500);
    CHECK(stats.box_tests > 0);
}

TEST_CASE("empty meshes are rejected") {
    VertexSet vertices(0, 3);
    MeshTopology topo;
    CHECK_THROWS_AS(build_bvh(vertices, topo), std::invalid_argument);
    CHECK_THROWS_AS(TriangleBVH(vertices, {}), std::invalid_argument);
}

} // TEST_SUITE

#include <doctest.h>

#include "check.hpp"
#include "fixtures.hpp"
#include "toy.hpp"
#include "ugciqa/psych.hpp"
#include "ugciqa/rng.hpp"
#include "ugciqa/train.hpp"

using namespace ugciqa;
using namespace ugciqa::nn;

namespace {

TrainConfig toy_train(int pad_side) {
  TrainConfig c;
  c.pad_side = pad_side;
  c.batch_size = 4;
  c.epochs = 1;
  return c;
}

std::vector<double> flat_params(const QualityModel& m) {
  std::vector<double> out;
  for (const auto& p : m.parameters()) out.insert(out.end(), p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("defaults are the full-scale schedule") {
    const TrainConfig c;
    CHECK(c.batch_size == 120);
    CHECK(c.epochs == 10);
    CHECK(c.pad_side == 640);
    CHECK(c.beta1 == 0.9);
    CHECK(c.beta2 == 0.99);
    CHECK(c.weight_decay == 0.01);
    CHECK(c.lr_backbone == 3e-4);
    CHECK(c.lr_head == 3e-3);
    const TrainConfig d = TrainConfig::desk_scale();
    CHECK(d.pad_side == 160);
    CHECK(d.batch_size == 16);
  }

  TEST_CASE("AdamW first step") {
    Tensor w = Tensor::from_values({2}, {1.0, -2.0}, true);
    std::vector<Parameter> params{{"w", w, false}};
    w.mutable_grad()[0] = 0.5;
    w.mutable_grad()[1] = -4.0;
    AdamW opt(0.9, 0.99, 1e-8, 0.01);
    opt.step(params, 0.1, 1.0);
    // Bias-corrected m/sqrt(v) is sign(g) on the first step.
    CHECK(w.values()[0] == doctest::Approx(1.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * 1.0)).epsilon(1e-14));
    CHECK(w.values()[1] == doctest::Approx(-2.0 - 0.1 * (-4.0 / (4.0 + 1e-8) + 0.01 * -2.0)).epsilon(1e-14));
    CHECK(opt.steps() == 1);
  }

  TEST_CASE("zero learning rates leave parameters unchanged") {
    QualityModel m(fixtures::toy_config(ModelKind::kFeedback), 1);
    const auto before = flat_params(m);
    auto cfg = toy_train(32);
    cfg.lr_backbone = 0.0;
    cfg.lr_head = 0.0;
    const auto data = fixtures::ramp_dataset(6, 32, 2);
    const auto r = train(m, data, cfg);
    CHECK(r.steps == 2);
    CHECK(flat_params(m) == before);
  }

  TEST_CASE("single-sample loss is monotone") {
    QualityModel m(fixtures::toy_config(ModelKind::kFeedback), 2);
    auto cfg = toy_train(32);
    cfg.batch_size = 1;
    cfg.epochs = 50;
    cfg.lr_backbone = 1e-4;
    cfg.lr_head = 1e-3;
    const auto data = fixtures::ramp_dataset(1, 32, 3);
    const auto r = train(m, data, cfg);
    REQUIRE(r.loss_curve.size() == 50);
    for (std::size_t i = 1; i < r.loss_curve.size(); ++i) CHECK(r.loss_curve[i] <= r.loss_curve[i - 1]);
    CHECK(r.loss_curve.back() < r.loss_curve.front());
  }

  TEST_CASE("training is reproducible") {
    const auto data = fixtures::ramp_dataset(8, 32, 4);
    auto cfg = toy_train(32);
    cfg.epochs = 2;
    cfg.seed = 17;
    QualityModel a(fixtures::toy_config(ModelKind::kRoIPool), 3);
    QualityModel b(fixtures::toy_config(ModelKind::kRoIPool), 3);
    CHECK(train(a, data, cfg).loss_curve == train(b, data, cfg).loss_curve);
    CHECK(flat_params(a) == flat_params(b));
  }

  TEST_CASE("max_steps caps training") {
    QualityModel m(fixtures::toy_config(ModelKind::kBaseline), 3);
    auto cfg = toy_train(32);
    cfg.epochs = 5;
    cfg.max_steps = 3;
    CHECK(train(m, fixtures::ramp_dataset(8, 32, 4), cfg).steps == 3);
  }

  TEST_CASE("dataset and config validation") {
    QualityModel m(fixtures::toy_config(ModelKind::kFeedback), 3);
    auto cfg = toy_train(32);
    CHECK_ERROR_CODE(train(m, std::vector<TrainSample>{}, cfg), ErrorCode::kConfig);
    auto data = fixtures::ramp_dataset(2, 32, 4);
    data[1].mos = 101.0;
    CHECK_ERROR_CODE(train(m, data, cfg), ErrorCode::kConfig);
    data = fixtures::ramp_dataset(2, 32, 4);
    data[0].patch_mos[2] = -1.0;
    CHECK_ERROR_CODE(train(m, data, cfg), ErrorCode::kConfig);
    CHECK_ERROR_CODE(train(m, fixtures::ramp_dataset(2, 28, 4), cfg), ErrorCode::kShape);
    cfg.lr_head = -1.0;
    CHECK_ERROR_CODE(train(m, fixtures::ramp_dataset(2, 32, 4), cfg), ErrorCode::kConfig);
    cfg = toy_train(32);
    cfg.beta2 = 1.0;
    CHECK_ERROR_CODE(cfg.validate(), ErrorCode::kConfig);
  }

  TEST_CASE("prepare_sample pads and shifts patches") {
    const ImageBuf img = fixtures::smooth_image(20, 10, 3, 1);
    const std::vector<Rect> p{{0, 0, 4, 4}};
    const std::vector<double> pm{40.0};
    const TrainSample s = prepare_sample(img, p, 50.0, pm, 32);
    CHECK(s.image.width() == 32);
    CHECK(s.patches[0] == Rect{6, 11, 10, 15});
    const std::vector<Rect> bad{{18, 0, 24, 4}};
    CHECK_ERROR_CODE(prepare_sample(img, bad, 50.0, pm, 32), ErrorCode::kBounds);
  }

  TEST_CASE("gradient check on toy models") {
    const auto data = fixtures::ramp_dataset(1, 16, 8);
    for (ModelKind kind : {ModelKind::kBaseline, ModelKind::kRoIPool, ModelKind::kFeedback}) {
      QualityModel m(fixtures::toy_config(kind), 12);
      CHECK_MESSAGE(grad_check(m, data[0], 1e-4) < 1e-3, model_kind_name(kind));
    }
  }

  TEST_CASE("evaluate") {
    const QualityModel m(fixtures::toy_config(ModelKind::kRoIPool), 4);
    std::vector<ImageBuf> imgs;
    std::vector<double> mos;
    for (int i = 0; i < 5; ++i) {
      imgs.push_back(fixtures::smooth_image(30, 30, 3, i));
      mos.push_back(m.predict(imgs.back(), 32));
    }
    const EvalResult exact = evaluate(m, imgs, mos, 32);
    REQUIRE(exact.srcc.has_value());
    CHECK(*exact.srcc == doctest::Approx(1.0));
    CHECK(*exact.lcc == doctest::Approx(1.0));

    QualityModel flat(fixtures::toy_config(ModelKind::kRoIPool), 4);
    for (double& v : flat.parameter("head.fc2.weight").mutable_values()) v = 0.0;
    const EvalResult undefined = evaluate(flat, imgs, mos, 32);
    CHECK_FALSE(undefined.srcc.has_value());
    CHECK_FALSE(undefined.metric_error.empty());

    CHECK_ERROR_CODE(evaluate(m, std::span<const ImageBuf>(imgs).first(2),
                              std::span<const double>(mos).first(2), 32),
                     ErrorCode::kMetric);
  }

  TEST_CASE("noisy predictions keep a high rank correlation") {
    Rng rng(14);
    std::vector<double> t(100), p(100);
    for (int i = 0; i < 100; ++i) {
      t[i] = rng.uniform(0, 100);
      p[i] = t[i] + rng.normal(0, 2.0);
    }
    const double s = srcc(p, t);
    CHECK(s >= 0.9);
    CHECK(s <= 1.0);
  }

  TEST_CASE("loss CSV") {
    fixtures::TempDir dir;
    const std::vector<double> curve{3.5, 2.25};
    write_loss_csv((dir / "loss.csv").string(), curve, 9);
    CHECK(fixtures::read_file(dir / "loss.csv") ==
          "# ugciqa schema_version=1 seed=9\nstep,loss\n0,3.5\n1,2.25\n");
  }
}

#include "network.hpp"

#include "field.hpp"

namespace uhrnet {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::A: return "A";
        case Variant::B: return "B";
        case Variant::C: return "C";
        case Variant::D: return "D";
    }
    throw ConfigError("invalid variant value");
}

Variant variant_from_name(const std::string& name) {
    if (name == "A" || name == "a") return Variant::A;
    if (name == "B" || name == "b") return Variant::B;
    if (name == "C" || name == "c") return Variant::C;
    if (name == "D" || name == "d") return Variant::D;
    throw ConfigError("unknown variant '" + name + "' (expected A|B|C|D)");
}

NetworkConfig NetworkConfig::for_variant(Variant v) {
    NetworkConfig cfg;
    cfg.variant = v;
    switch (v) {
        case Variant::A:
            cfg.use_mlb = false;
            cfg.use_hfb = false;
            cfg.base_channels = 32;
            break;
        case Variant::B:
            cfg.use_mlb = true;
            cfg.use_hfb = false;
            break;
        case Variant::C:
        case Variant::D:
            cfg.use_mlb = true;
            cfg.use_hfb = true;
            break;
    }
    return cfg;
}

void NetworkConfig::validate() const {
    if (in_channels < 1 || out_channels < 1) throw ConfigError("channel counts must be positive");
    if (base_channels < 4) throw ConfigError("base_channels must be at least 4");
    if (use_mlb && base_channels % 4 != 0) {
        throw ConfigError("base_channels must be divisible by 4 when multi-level blocks are enabled");
    }
    for (int r : dilation_rates) {
        if (r < 1) throw ConfigError("dilation rates must be positive");
    }
    if (leaky_slope < 0.0) throw ConfigError("leaky_slope must be nonnegative");
}

void to_json(nlohmann::json& j, const NetworkConfig& cfg) {
    j = nlohmann::json{{"in_channels", cfg.in_channels},
                       {"out_channels", cfg.out_channels},
                       {"base_channels", cfg.base_channels},
                       {"dilation_rates", cfg.dilation_rates},
                       {"leaky_slope", cfg.leaky_slope},
                       {"use_mlb", cfg.use_mlb},
                       {"use_hfb", cfg.use_hfb},
                       {"variant", variant_name(cfg.variant)}};
}

void from_json(const nlohmann::json& j, NetworkConfig& cfg) {
    if (j.contains("variant")) {
        cfg = NetworkConfig::for_variant(variant_from_name(j.at("variant").get<std::string>()));
    }
    if (j.contains("in_channels")) j.at("in_channels").get_to(cfg.in_channels);
    if (j.contains("out_channels")) j.at("out_channels").get_to(cfg.out_channels);
    if (j.contains("base_channels")) j.at("base_channels").get_to(cfg.base_channels);
    if (j.contains("dilation_rates")) j.at("dilation_rates").get_to(cfg.dilation_rates);
    if (j.contains("leaky_slope")) j.at("leaky_slope").get_to(cfg.leaky_slope);
    if (j.contains("use_mlb")) j.at("use_mlb").get_to(cfg.use_mlb);
    if (j.contains("use_hfb")) j.at("use_hfb").get_to(cfg.use_hfb);
}

namespace {

torch::nn::Conv2d conv3x3(int in_ch, int out_ch, int dilation = 1) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, out_ch, 3)
                                 .padding(dilation)
                                 .dilation(dilation)
                                 .bias(false));
}

torch::nn::Sequential conv_bn_act(torch::nn::Conv2d conv, int out_ch, double slope) {
    return torch::nn::Sequential(
        conv, torch::nn::BatchNorm2d(out_ch),
        torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(slope)));
}

torch::nn::Sequential upsample_path(int in_ch, int out_ch, int factor, double slope) {
    auto ct = torch::nn::ConvTranspose2d(
        torch::nn::ConvTranspose2dOptions(in_ch, out_ch, factor).stride(factor).bias(false));
    return torch::nn::Sequential(
        ct, torch::nn::BatchNorm2d(out_ch),
        torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(slope)));
}

}  // namespace

MultiLevelBlockImpl::MultiLevelBlockImpl(int in_ch, int out_ch, std::array<int, 4> rates,
                                         double slope_in)
    : slope(slope_in) {
    if (out_ch % 4 != 0) throw ConfigError("multi-level block output channels must be divisible by 4");
    branches = torch::nn::ModuleList();
    for (int rate : rates) {
        branches->push_back(conv_bn_act(conv3x3(in_ch, out_ch / 4, rate), out_ch / 4, slope));
    }
    register_module("branches", branches);
    if (in_ch != out_ch) {
        skip_conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, out_ch, 1).bias(false));
        skip_bn = torch::nn::BatchNorm2d(out_ch);
        register_module("skip_conv", skip_conv);
        register_module("skip_bn", skip_bn);
    }
}

torch::Tensor MultiLevelBlockImpl::forward(torch::Tensor x) {
    std::vector<torch::Tensor> outs;
    outs.reserve(branches->size());
    for (const auto& branch : *branches) {
        outs.push_back(branch->as<torch::nn::Sequential>()->forward(x));
    }
    torch::Tensor fused = torch::cat(outs, 1);
    torch::Tensor skipped = skip_conv ? skip_bn->forward(skip_conv->forward(x)) : x;
    return torch::leaky_relu(fused + skipped, slope);
}

DoubleConvBlockImpl::DoubleConvBlockImpl(int in_ch, int out_ch, double slope) {
    auto act = torch::nn::LeakyReLUOptions().negative_slope(slope);
    layers = torch::nn::Sequential(conv3x3(in_ch, out_ch), torch::nn::BatchNorm2d(out_ch),
                                   torch::nn::LeakyReLU(act), conv3x3(out_ch, out_ch),
                                   torch::nn::BatchNorm2d(out_ch), torch::nn::LeakyReLU(act));
    register_module("layers", layers);
}

torch::Tensor DoubleConvBlockImpl::forward(torch::Tensor x) { return layers->forward(x); }

LevelBlockImpl::LevelBlockImpl(int in_ch, int out_ch, const NetworkConfig& cfg) {
    if (cfg.use_mlb) {
        mlb = MultiLevelBlock(in_ch, out_ch, cfg.dilation_rates, cfg.leaky_slope);
        register_module("mlb", mlb);
    } else {
        plain = DoubleConvBlock(in_ch, out_ch, cfg.leaky_slope);
        register_module("plain", plain);
    }
}

torch::Tensor LevelBlockImpl::forward(torch::Tensor x) {
    return mlb ? mlb->forward(x) : plain->forward(x);
}

HighResFusionBlockImpl::HighResFusionBlockImpl(int level_in, const NetworkConfig& cfg)
    : level(level_in) {
    if (level < 1 || level > 3) {
        throw ConfigError("fusion block level must be 1, 2 or 3 (level 4 uses the raw skip)");
    }
    const int target_ch = cfg.base_channels << (level - 1);
    const double slope = cfg.leaky_slope;

    up_paths = torch::nn::ModuleList();
    int stage1_inputs = 1;
    for (int j = level + 1; j <= 4; ++j) {
        const int src_ch = cfg.base_channels << (j - 1);
        up_paths->push_back(upsample_path(src_ch, target_ch, 1 << (j - level), slope));
        ++stage1_inputs;
    }
    register_module("up_paths", up_paths);
    fuse1 = conv_bn_act(conv3x3(stage1_inputs * target_ch, target_ch), target_ch, slope);
    register_module("fuse1", fuse1);

    if (level >= 2) {
        down_paths = torch::nn::ModuleList();
        for (int j = 1; j < level; ++j) {
            const int src_ch = cfg.base_channels << (j - 1);
            const int factor = 1 << (level - j);
            down_paths->push_back(torch::nn::Sequential(
                torch::nn::AvgPool2d(torch::nn::AvgPool2dOptions(factor).stride(factor)),
                torch::nn::Conv2d(torch::nn::Conv2dOptions(src_ch, target_ch, 1).bias(false)),
                torch::nn::BatchNorm2d(target_ch),
                torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(slope))));
        }
        register_module("down_paths", down_paths);
        fuse2 = conv_bn_act(conv3x3(level * target_ch, target_ch), target_ch, slope);
        register_module("fuse2", fuse2);
    }
}

torch::Tensor HighResFusionBlockImpl::forward(const std::vector<torch::Tensor>& pyramid) {
    if (pyramid.size() != 4) throw ShapeError("fusion block expects the four encoder levels");

    std::vector<torch::Tensor> stage1{pyramid[level - 1]};
    for (int j = level + 1; j <= 4; ++j) {
        auto path = up_paths[j - level - 1]->as<torch::nn::Sequential>();
        stage1.push_back(path->forward(pyramid[j - 1]));
    }
    torch::Tensor fused = fuse1->forward(torch::cat(stage1, 1));
    if (level < 2) return fused;

    std::vector<torch::Tensor> stage2;
    for (int j = 1; j < level; ++j) {
        auto path = down_paths[j - 1]->as<torch::nn::Sequential>();
        stage2.push_back(path->forward(pyramid[j - 1]));
    }
    stage2.push_back(fused);
    return fuse2->forward(torch::cat(stage2, 1));
}

UHRNetImpl::UHRNetImpl(NetworkConfig cfg) : config(cfg) {
    config.validate();
    const int c1 = config.base_channels;
    const int c2 = c1 * 2, c3 = c1 * 4, c4 = c1 * 8, c5 = c1 * 16;
    const double slope = config.leaky_slope;

    enc1 = LevelBlock(config.in_channels, c1, config);
    enc2 = LevelBlock(c1, c2, config);
    enc3 = LevelBlock(c2, c3, config);
    enc4 = LevelBlock(c3, c4, config);
    bottom = LevelBlock(c4, c5, config);
    register_module("enc1", enc1);
    register_module("enc2", enc2);
    register_module("enc3", enc3);
    register_module("enc4", enc4);
    register_module("bottom", bottom);
    pool = torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2).stride(2));
    register_module("pool", pool);

    if (config.use_hfb) {
        hfb1 = HighResFusionBlock(1, config);
        hfb2 = HighResFusionBlock(2, config);
        hfb3 = HighResFusionBlock(3, config);
        register_module("hfb1", hfb1);
        register_module("hfb2", hfb2);
        register_module("hfb3", hfb3);
    }

    up4 = upsample_path(c5, c4, 2, slope);
    up3 = upsample_path(c4, c3, 2, slope);
    up2 = upsample_path(c3, c2, 2, slope);
    up1 = upsample_path(c2, c1, 2, slope);
    register_module("up4", up4);
    register_module("up3", up3);
    register_module("up2", up2);
    register_module("up1", up1);

    dec4 = LevelBlock(c4 * 2, c4, config);
    dec3 = LevelBlock(c3 * 2, c3, config);
    dec2 = LevelBlock(c2 * 2, c2, config);
    dec1 = LevelBlock(c1 * 2, c1, config);
    register_module("dec4", dec4);
    register_module("dec3", dec3);
    register_module("dec2", dec2);
    register_module("dec1", dec1);

    head = torch::nn::Conv2d(torch::nn::Conv2dOptions(c1, config.out_channels, 1));
    register_module("head", head);
}

torch::Tensor UHRNetImpl::forward(torch::Tensor x) {
    if (x.dim() != 4) {
        throw ShapeError("expected a BxCxHxW batch, got dim " + std::to_string(x.dim()));
    }
    if (x.size(1) != config.in_channels) {
        throw ShapeError("expected " + std::to_string(config.in_channels) + " input channels, got " +
                         std::to_string(x.size(1)));
    }
    if (x.size(2) % 16 != 0 || x.size(3) % 16 != 0) {
        throw ShapeError("input " + std::to_string(x.size(2)) + "x" + std::to_string(x.size(3)) +
                         " is not divisible by 16");
    }

    torch::Tensor e1 = enc1->forward(x);
    torch::Tensor e2 = enc2->forward(pool->forward(e1));
    torch::Tensor e3 = enc3->forward(pool->forward(e2));
    torch::Tensor e4 = enc4->forward(pool->forward(e3));
    torch::Tensor b = bottom->forward(pool->forward(e4));

    torch::Tensor l1 = e1, l2 = e2, l3 = e3;
    if (config.use_hfb) {
        std::vector<torch::Tensor> pyramid{e1, e2, e3, e4};
        l1 = hfb1->forward(pyramid);
        l2 = hfb2->forward(pyramid);
        l3 = hfb3->forward(pyramid);
    }

    torch::Tensor d4 = dec4->forward(torch::cat({e4, up4->forward(b)}, 1));
    torch::Tensor d3 = dec3->forward(torch::cat({l3, up3->forward(d4)}, 1));
    torch::Tensor d2 = dec2->forward(torch::cat({l2, up2->forward(d3)}, 1));
    torch::Tensor d1 = dec1->forward(torch::cat({l1, up1->forward(d2)}, 1));
    return head->forward(d1);
}

int64_t count_parameters(const torch::nn::Module& net) {
    int64_t total = 0;
    for (const auto& p : net.parameters()) {
        if (p.requires_grad()) total += p.numel();
    }
    return total;
}

}  // namespace uhrnet

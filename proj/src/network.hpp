#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace uhrnet {

enum class Variant { A, B, C, D };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Architecture parameters. The variant presets bundle the ablation axes:
/// A = plain double-conv U-Net at half width, B adds multi-level blocks,
/// C and D add the high-resolution fusion blocks on top (C and D share the
/// architecture and differ only in training loss).
struct NetworkConfig {
    int in_channels = 1;
    int out_channels = 1;
    int base_channels = 64;
    std::array<int, 4> dilation_rates{1, 2, 4, 8};
    double leaky_slope = 0.01;
    bool use_mlb = true;
    bool use_hfb = true;
    Variant variant = Variant::D;

    static NetworkConfig for_variant(Variant v);
    void validate() const;
};

void to_json(nlohmann::json& j, const NetworkConfig& cfg);
void from_json(const nlohmann::json& j, NetworkConfig& cfg);

/// Four parallel dilated 3x3 convolutions (each to out/4 channels, BN +
/// leaky ReLU), concatenated, plus an additive skip (identity when channel
/// counts match, else 1x1 conv + BN), then a final leaky ReLU.
struct MultiLevelBlockImpl : torch::nn::Module {
    MultiLevelBlockImpl(int in_ch, int out_ch, std::array<int, 4> rates, double slope);
    torch::Tensor forward(torch::Tensor x);

    torch::nn::ModuleList branches;
    torch::nn::Conv2d skip_conv{nullptr};
    torch::nn::BatchNorm2d skip_bn{nullptr};
    double slope = 0.01;
};
TORCH_MODULE(MultiLevelBlock);

/// Two 3x3 convolutions, each with BN + leaky ReLU.
struct DoubleConvBlockImpl : torch::nn::Module {
    DoubleConvBlockImpl(int in_ch, int out_ch, double slope);
    torch::Tensor forward(torch::Tensor x);

    torch::nn::Sequential layers;
};
TORCH_MODULE(DoubleConvBlock);

/// Per-level feature block: a MultiLevelBlock or a DoubleConvBlock depending
/// on the configuration.
struct LevelBlockImpl : torch::nn::Module {
    LevelBlockImpl(int in_ch, int out_ch, const NetworkConfig& cfg);
    torch::Tensor forward(torch::Tensor x);

    MultiLevelBlock mlb{nullptr};
    DoubleConvBlock plain{nullptr};
};
TORCH_MODULE(LevelBlock);

/// Fuses the whole encoder pyramid into the geometry of one level. Stage 1
/// brings every level at or below the target resolution up with transposed
/// convolutions (kernel = stride = scale gap) and fuses with a 3x3 conv.
/// Stage 2, present for levels 2 and 3, brings the higher-resolution levels
/// down with average pooling + 1x1 conv and fuses again.
struct HighResFusionBlockImpl : torch::nn::Module {
    HighResFusionBlockImpl(int level, const NetworkConfig& cfg);
    torch::Tensor forward(const std::vector<torch::Tensor>& pyramid);

    int level = 1;
    torch::nn::ModuleList up_paths;
    torch::nn::Sequential fuse1{nullptr};
    torch::nn::ModuleList down_paths;
    torch::nn::Sequential fuse2{nullptr};
};
TORCH_MODULE(HighResFusionBlock);

/// Fringe-to-height network: four encoder levels (block + 2x2 max pool),
/// a bottleneck block, and four decoder levels (transposed-conv upsample,
/// concatenate lateral, block). Lateral inputs for decoder levels 1..3 are
/// fusion-block outputs when enabled, raw encoder skips otherwise; level 4
/// always takes the raw encoder-4 skip. A final 1x1 convolution maps to the
/// output channels with no BN or activation.
struct UHRNetImpl : torch::nn::Module {
    explicit UHRNetImpl(NetworkConfig cfg = {});
    torch::Tensor forward(torch::Tensor x);

    NetworkConfig config;

    LevelBlock enc1{nullptr}, enc2{nullptr}, enc3{nullptr}, enc4{nullptr}, bottom{nullptr};
    torch::nn::MaxPool2d pool{nullptr};
    HighResFusionBlock hfb1{nullptr}, hfb2{nullptr}, hfb3{nullptr};
    torch::nn::Sequential up4{nullptr}, up3{nullptr}, up2{nullptr}, up1{nullptr};
    LevelBlock dec4{nullptr}, dec3{nullptr}, dec2{nullptr}, dec1{nullptr};
    torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(UHRNet);

/// Number of trainable scalars.
int64_t count_parameters(const torch::nn::Module& net);

}  // namespace uhrnet

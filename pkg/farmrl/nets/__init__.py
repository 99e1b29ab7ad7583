# flake8: noqa: F401
from farmrl.nets.conv_lstm import ConvLSTMCell, ConvLSTMState
from farmrl.nets.encoder import ObservationEncoder, image_to_tensor
from farmrl.nets.gru import GRULanguageEncoder
from farmrl.nets.layer import Layer
from farmrl.nets.lstm import LSTMCell, LSTMState
from farmrl.nets.mlp import MLPHead
from farmrl.nets.resnet import ResNetEncoder
from farmrl.nets.vocabulary import PAD_ID, UNK_ID, Vocabulary
